"""CSV emission and parsing: RFC-4180 rows under '#'-prefixed metadata lines.

Column sets are fixed per file kind (plus the version string), so emitted
files are schema-stable and byte-deterministic for identical runs.
"""

import csv
import io

from . import __version__

SERIES_COLUMNS = [
    "t", "dt", "norm_u_h3", "norm_b_h3", "norm_U_h3", "norm_B_h3",
    "energy_total",
    "e_dissipation_u", "e_advection_u", "e_lorentz",
    "e_dissipation_b", "e_advection_b", "e_stretching", "e_hall", "e_ionslip",
    "e_total",
]


def fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def standard_comments(grid, params, extra=()):
    lines = [
        f"hismhd version={__version__}",
        f"grid n={grid.n} box_length={fmt(grid.box_length)} spacing={fmt(grid.spacing)}",
        "domain: periodic box stand-in for the whole-space setting; "
        f"cutoff support {fmt(2 * params.m0)} inside box {fmt(grid.box_length)}",
        "params "
        + " ".join(f"{name}={fmt(getattr(params, name))}" for name in params.names()),
    ]
    lines.extend(extra)
    return lines


def write_csv(path, comments, header, rows):
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) for v in row])


def read_csv(path):
    """Returns (comments, header, rows of float-or-str)."""
    comments, header, rows = [], None, []
    with open(path, newline="") as fh:
        data_lines = []
        for line in fh:
            if line.startswith("#"):
                comments.append(line[1:].strip())
            else:
                data_lines.append(line)
    reader = csv.reader(io.StringIO("".join(data_lines)))
    for i, row in enumerate(reader):
        if not row:
            continue
        if i == 0:
            header = row
        else:
            rows.append([_maybe_float(v) for v in row])
    return comments, header, rows


def _maybe_float(v):
    try:
        return float(v)
    except ValueError:
        return v


def write_keyvalue_csv(path, comments, items):
    write_csv(path, comments, ["key", "value"], [(k, v) for k, v in items])


def write_report_csv(path, report, grid, params):
    comments = standard_comments(grid, params)
    comments.append(f"report={report.name}")
    for key, fit in report.fits.items():
        comments.append(
            f"fit {key}: rate={fmt(fit.rate)} residual={fmt(fit.residual)} "
            f"nsamples={fit.nsamples}"
        )
    for key, value in report.expected_rates.items():
        comments.append(f"expected_rate {key}={fmt(value)}")
    for key, value in report.checks.items():
        comments.append(f"check {key}={'pass' if value else 'FAIL'}")
    for key, value in report.metadata.items():
        comments.append(f"meta {key}={fmt(value)}")
    header = ["t"] + list(report.series) + [f"bound_{k}" for k in report.bounds]
    rows = []
    for i, t in enumerate(report.t_grid):
        row = [t]
        for key in report.series:
            row.append(report.series[key][i])
        for key in report.bounds:
            bound = report.bounds[key]
            row.append(bound[i] if hasattr(bound, "__len__") else bound)
        rows.append(row)
    write_csv(path, comments, header, rows)
