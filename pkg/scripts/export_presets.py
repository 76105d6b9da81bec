"""Write every built-in scenario as a JSON config file (handy as templates)."""
import argparse
import json
from pathlib import Path

from sprayforge.scenarios import SCHEMA, preset_document, preset_names


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("out_dir", nargs="?", default="configs")
    ap.add_argument("--all", action="store_true", help="include negative controls")
    args = ap.parse_args()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in preset_names(include_controls=args.all):
        doc = {"schema": SCHEMA, "name": name, **preset_document(name)}
        (out / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")
        print(out / f"{name}.json")


if __name__ == "__main__":
    main()
