import json
from pathlib import Path

import numpy as np
import polars as pl
import structlog

logger = structlog.get_logger()

REPORT_JSON = "report.json"
REPORT_TEXT = "report.txt"


def _number(value):
    if value is None:
        return None
    value = float(value)
    return None if np.isnan(value) else value


def result_row(method, segmentation=None, accuracy=None):
    """One report row: method name, per-part mIoU, average mIoU and accuracy.

    Segmentation rows also carry the mIoU of every shape.
    """
    row = {"method": method, "part_miou": {}, "average_miou": None, "accuracy": None}
    if segmentation is not None:
        values = segmentation.to_dict()
        row["part_miou"] = values["part_miou"]
        row["average_miou"] = values["average_miou"]
        row["num_shapes"] = values["num_shapes"]
        row["instance_miou"] = values["instance_miou"]
    if accuracy is not None:
        row["accuracy"] = _number(accuracy)

    return row


def cross_part_record(matrix, pred_names, gt_names, part_map=None):
    """Cross-part matrix plus, when a part map is given, the mapped pair scores."""
    matrix = np.asarray(matrix)
    record = {
        "pred_parts": list(pred_names),
        "gt_parts": list(gt_names),
        "matrix": [[_number(v) for v in row] for row in matrix],
    }

    if part_map:
        mapped = {}
        for pred, gt in sorted(part_map.items()):
            if pred in pred_names and gt in gt_names:
                mapped[f"{pred}->{gt}"] = _number(
                    matrix[list(pred_names).index(pred), list(gt_names).index(gt)]
                )
            else:
                logger.warning("part_map_entry_skipped", pred=pred, gt=gt)
        record["mapped"] = mapped

    return record


def results_frame(rows, part_names):
    columns = {"method": [row["method"] for row in rows]}
    for name in part_names:
        columns[name] = [row["part_miou"].get(name) for row in rows]
    columns["average_miou"] = [row["average_miou"] for row in rows]
    columns["accuracy"] = [row["accuracy"] for row in rows]

    schema = {name: pl.Float64 for name in columns} | {"method": pl.String}
    frame = pl.DataFrame(columns, schema=schema)

    return frame.with_columns((pl.exclude("method") * 100).round(1))


def matrix_frame(record):
    frame = pl.DataFrame(
        np.asarray(record["matrix"], dtype=np.float64) * 100,
        schema=record["gt_parts"],
        orient="row",
    )
    frame = frame.with_columns(pl.all().round(1))
    return frame.insert_column(0, pl.Series("part", record["pred_parts"]))


def format_table(frame):
    with pl.Config(
        tbl_rows=-1,
        tbl_cols=-1,
        tbl_hide_dataframe_shape=True,
        tbl_hide_column_data_types=True,
        tbl_formatting="ASCII_MARKDOWN",
        fmt_str_lengths=40,
    ):
        return str(frame)


def text_report(report):
    sections = [format_table(results_frame(report["results"], report["part_names"]))]
    for key in ("cross_part", "ood_cross_part"):
        if report.get(key):
            sections.append(f"{key} (mIoU %)\n" + format_table(matrix_frame(report[key])))

    return "\n\n".join(sections) + "\n"


def write_report(directory, report):
    """report.json and an aligned text rendering of the same numbers."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    (directory / REPORT_JSON).write_text(json.dumps(report, indent=2), encoding="utf-8")
    (directory / REPORT_TEXT).write_text(text_report(report), encoding="utf-8")

    logger.info("report_written", directory=str(directory))
    return directory / REPORT_JSON
