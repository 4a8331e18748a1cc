#!/usr/bin/env python3
"""Convert a dense ARFF file to the CSV layout `ect` reads.

Numeric attributes become feature columns. The class attribute (the last
nominal attribute unless --class is given) becomes the `label` column.
Other nominal or string attributes are dropped with a note on stderr.
Missing values (`?`) are kept so that `ect` drops and counts those rows.

    python3 scripts/arff_to_csv.py ecoli.arff data/ecoli.csv
"""

import argparse
import csv
import shlex
import sys

NUMERIC = {"numeric", "real", "integer"}


def parse_attribute(line):
    # @attribute <name> <type>; names and nominal sets may be quoted
    rest = line.split(None, 1)[1].strip()
    if rest.startswith(("'", '"')):
        name = shlex.split(rest)[0]
        kind = rest[len(name) + 2:].strip()
    else:
        name, kind = rest.split(None, 1)
    return name, kind.strip()


def read_arff(path):
    attrs, rows, in_data = [], [], False
    with open(path, encoding="utf-8", errors="replace") as f:
        for raw in f:
            line = raw.strip()
            if not line or line.startswith("%"):
                continue
            low = line.lower()
            if not in_data:
                if low.startswith("@attribute"):
                    attrs.append(parse_attribute(line))
                elif low.startswith("@data"):
                    in_data = True
                continue
            if line.startswith("{"):
                sys.exit("sparse ARFF rows are not supported")
            rows.append(next(csv.reader([line], quotechar="'", skipinitialspace=True)))
    return attrs, rows


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("arff")
    ap.add_argument("csv")
    ap.add_argument("--class", dest="cls", help="class attribute name")
    args = ap.parse_args()

    attrs, rows = read_arff(args.arff)
    names = [a[0] for a in attrs]
    if args.cls:
        if args.cls not in names:
            sys.exit(f"no attribute named {args.cls!r}")
        label = names.index(args.cls)
    else:
        nominal = [i for i, (_, kind) in enumerate(attrs) if kind.startswith("{")]
        if not nominal:
            sys.exit("no nominal attribute to use as the class; pass --class")
        label = nominal[-1]

    keep = [i for i, (_, kind) in enumerate(attrs) if i != label and kind.lower() in NUMERIC]
    dropped = [names[i] for i in range(len(attrs)) if i != label and i not in keep]
    if dropped:
        print(f"dropping non-numeric attributes: {', '.join(dropped)}", file=sys.stderr)

    with open(args.csv, "w", newline="", encoding="utf-8") as out:
        w = csv.writer(out)
        w.writerow([names[i] for i in keep] + ["label"])
        for r in rows:
            if len(r) != len(attrs):
                sys.exit(f"row has {len(r)} fields, expected {len(attrs)}")
            w.writerow([r[i].strip() for i in keep] + [r[label].strip()])
    print(f"{len(rows)} rows, {len(keep)} features -> {args.csv}", file=sys.stderr)


if __name__ == "__main__":
    main()
