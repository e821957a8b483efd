"""partlisten <command> [options]: one entry point for every script."""

import sys

from .scripts import evaluate, prepare, synth, train, visualize

COMMANDS = {
    "prepare": prepare.main,
    "synth": synth.main,
    "train": train.main,
    "eval": evaluate.main,
    "visualize": visualize.main,
}

USAGE = "usage: partlisten {" + ",".join(COMMANDS) + "} [options]"


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv or argv[0] not in COMMANDS:
        print(USAGE, file=sys.stderr)
        return 2

    return COMMANDS[argv[0]](argv[1:])


def cli():
    sys.exit(main())


if __name__ == "__main__":
    cli()
