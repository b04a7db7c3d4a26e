#!/usr/bin/env python3
"""Write the Mayo Clinic PBC data (R `survival::pbc`) as data/pbc.csv.

Columns: time, event (1 = death, 0 = censored or transplant), age, albumin,
bili, edema, protime. Missing values are written as empty fields.

Source order: the `rdatasets` Python package if installed, otherwise the
Rdatasets CSV mirror.
"""
import csv
import io
import os
import sys
import urllib.request

URL = "https://vincentarelbundock.github.io/Rdatasets/csv/survival/pbc.csv"
COLUMNS = ["age", "albumin", "bili", "edema", "protime"]


def load_rows():
    try:
        import rdatasets

        df = rdatasets.data("survival", "pbc")
        return df.to_dict("records")
    except ImportError:
        with urllib.request.urlopen(URL, timeout=60) as resp:
            text = resp.read().decode("utf-8")
        return list(csv.DictReader(io.StringIO(text)))


def fmt(value):
    if value is None:
        return ""
    text = str(value)
    if text in ("NA", "nan", ""):
        return ""
    return text


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(__file__), "..", "data", "pbc.csv"
    )
    rows = load_rows()
    os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "event"] + COLUMNS)
        for r in rows:
            event = 1 if int(float(r["status"])) == 2 else 0
            w.writerow([fmt(r["time"]), event] + [fmt(r[c]) for c in COLUMNS])
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()
