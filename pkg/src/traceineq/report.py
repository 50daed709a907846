"""Line-oriented report records.

One JSON object per line, keys in insertion order, floats written with 17
significant digits so identical runs give byte-identical output and every
double round-trips exactly. Non-finite floats use the ``Infinity`` /
``NaN`` literals accepted by Python's ``json`` module.
"""

import json
import math

import numpy as np


def _encode(value) -> str:
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isnan(x):
            return "NaN"
        if math.isinf(x):
            return "Infinity" if x > 0 else "-Infinity"
        return format(x, ".17g")
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_encode(v)}" for k, v in value.items()) + "}"
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_encode(v) for v in value) + "]"
    raise TypeError(f"cannot encode {type(value).__name__}")


def format_record(record: dict) -> str:
    return _encode(record)


def parse_record(line: str) -> dict:
    return json.loads(line)


class ReportWriter:
    def __init__(self, stream):
        self.stream = stream
        self.count = 0

    def write(self, record: dict):
        self.stream.write(format_record(record) + "\n")
        self.count += 1
