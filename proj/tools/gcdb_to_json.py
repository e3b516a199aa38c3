#!/usr/bin/env python3
"""Convert a flat minutia listing into a rarefit dataset file.

Input is CSV with a header row and the columns

    subject,impression,x,y,theta,type[,group]

where impression is "latent" or "tenprint", x/y are pixels at 500 ppi, theta
is in degrees [0, 360) and type is the 1-15 code. Rows of one subject and
impression that carry the same non-empty group label are the raw points of a
single multi-point minutia (Deviation, Assemble, ...); they are collapsed to
their mean location and smallest angle, and the raw points are kept.

    tools/gcdb_to_json.py casework.csv -o gcdb.json
"""

import argparse
import csv
import json
import sys
from collections import OrderedDict


def collapse(points):
    # sequential sums, matching the loader's own collapse check
    sx = 0.0
    sy = 0.0
    for x, y, _ in points:
        sx += x
        sy += y
    n = float(len(points))
    return sx / n, sy / n, min(t for _, _, t in points)


def read_rows(stream):
    reader = csv.DictReader(stream)
    need = {"subject", "impression", "x", "y", "theta", "type"}
    missing = need - set(reader.fieldnames or [])
    if missing:
        raise ValueError("missing columns: " + ", ".join(sorted(missing)))
    for line, row in enumerate(reader, start=2):
        imp = row["impression"].strip().lower()
        if imp not in ("latent", "tenprint"):
            raise ValueError(f"line {line}: impression must be latent or tenprint")
        try:
            x, y, theta = float(row["x"]), float(row["y"]), float(row["theta"])
            code = int(row["type"])
        except ValueError as e:
            raise ValueError(f"line {line}: {e}") from None
        if not 1 <= code <= 15:
            raise ValueError(f"line {line}: type code {code} outside 1-15")
        yield row["subject"].strip(), imp, x, y, theta % 360.0, code, (row.get("group") or "").strip()


def convert(rows):
    subjects = OrderedDict()
    for subject, imp, x, y, theta, code, group in rows:
        sets = subjects.setdefault(subject, {"latent": OrderedDict(), "tenprint": OrderedDict()})
        key = (group, code) if group else (len(sets[imp]), None)
        entry = sets[imp].setdefault(key, {"type": code, "points": []})
        if entry["type"] != code:
            raise ValueError(f"subject {subject}: group {group} mixes type codes")
        entry["points"].append((x, y, theta))

    out = []
    for subject, sets in subjects.items():
        item = OrderedDict(id=subject)
        for imp in ("latent", "tenprint"):
            minutiae = []
            for entry in sets[imp].values():
                pts = entry["points"]
                x, y, theta = collapse(pts)
                m = OrderedDict(x=x, y=y, theta_deg=theta, type=entry["type"])
                m["raw_points"] = [list(p) for p in pts] if len(pts) > 1 else None
                minutiae.append(m)
            if not minutiae:
                raise ValueError(f"subject {subject}: no {imp} minutiae")
            item[imp] = {"minutiae": minutiae}
        out.append(item)
    return OrderedDict(version=1, resolution_ppi=500, seed=None, source="gcdb", subjects=out)


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("input", help="CSV listing, or - for stdin")
    ap.add_argument("-o", "--output", required=True)
    args = ap.parse_args()
    try:
        if args.input == "-":
            data = convert(read_rows(sys.stdin))
        else:
            with open(args.input, newline="") as f:
                data = convert(read_rows(f))
    except (OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    with open(args.output, "w") as f:
        json.dump(data, f, indent=1)
        f.write("\n")
    print(f"{len(data['subjects'])} subjects written to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
