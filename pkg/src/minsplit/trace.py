"""Per-iteration residual records and deterministic CSV serialisation.

Floats are written with ``repr``, the shortest representation that
round-trips to the same double, so identical runs produce identical bytes.
"""

import time


def format_float(v):
    """Shortest round-trip decimal representation of a float."""
    return repr(float(v))


class ResidualTrace:
    """Columnar per-iteration records: iteration index, values, timestamps.

    Timestamps are wall-clock seconds and are excluded from CSV output by
    default so that reruns are byte-identical.
    """

    def __init__(self, columns):
        self.column_names = list(columns)
        self.ks = []
        self.columns = {name: [] for name in self.column_names}
        self.timestamps = []

    def append(self, k, values):
        self.ks.append(int(k))
        for name in self.column_names:
            self.columns[name].append(float(values[name]))
        self.timestamps.append(time.perf_counter())

    def __len__(self):
        return len(self.ks)

    def last(self, name):
        return self.columns[name][-1]

    def rows(self, names=None, include_timestamps=False):
        names = self.column_names if names is None else list(names)
        for idx, k in enumerate(self.ks):
            row = [str(k)] + [format_float(self.columns[n][idx]) for n in names]
            if include_timestamps:
                row.append(format_float(self.timestamps[idx]))
            yield row

    def to_csv(self, path, names=None, include_timestamps=False):
        names = self.column_names if names is None else list(names)
        header = ["k"] + names + (["t_wall"] if include_timestamps else [])
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in self.rows(names, include_timestamps):
                fh.write(",".join(row) + "\n")


def write_csv(path, header, rows):
    """Write pre-formatted rows (lists of strings) under a header line."""
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")
