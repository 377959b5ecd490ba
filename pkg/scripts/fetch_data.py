"""Export the wells and spam7 data sets to CSV files under ``data/``.

Needs the third-party ``rdatasets`` package (``pip install rdatasets``), which
bundles the R data sets ``carData::Wells`` and ``DAAG::spam7``. The files are
not shipped with this repository.

    python scripts/fetch_data.py [--dest data]
"""
import argparse
import csv
from pathlib import Path


def _write(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--dest", default=str(Path(__file__).resolve().parents[1] / "data"))
    args = parser.parse_args()
    try:
        import rdatasets
    except ImportError:
        raise SystemExit("rdatasets is not installed: pip install rdatasets")
    dest = Path(args.dest)
    dest.mkdir(parents=True, exist_ok=True)

    wells = rdatasets.data("carData", "Wells")
    rows = [
        (int(s == "yes"), repr(float(a)), repr(float(d)), int(e), int(assoc == "yes"))
        for s, a, d, e, assoc in zip(wells.switch, wells.arsenic, wells.distance,
                                     wells.education, wells.association)
    ]
    _write(dest / "wells.csv", ["y", "arsen", "dist", "edu", "assoc"], rows)

    spam = rdatasets.data("DAAG", "spam7")
    cols = ["crl.tot", "dollar", "bang", "money", "n000", "make"]
    rows = [(int(r["yesno"] == "y"), *(repr(float(r[c])) for c in cols))
            for _, r in spam.iterrows()]
    _write(dest / "spam7.csv", ["y", "crl_tot", "dollar", "bang", "money", "n000", "make"], rows)


if __name__ == "__main__":
    main()
