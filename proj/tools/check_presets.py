#!/usr/bin/env python3
"""Validate every preset config against the published JSON schema."""
import glob
import json
import os
import sys

try:
    import jsonschema
except ImportError:
    print("jsonschema not installed; skipping")
    sys.exit(0)


def main():
    schema_path, preset_dir = sys.argv[1], sys.argv[2]
    with open(schema_path) as f:
        schema = json.load(f)
    paths = sorted(glob.glob(os.path.join(preset_dir, "*.json")))
    if not paths:
        print("no presets found in", preset_dir)
        return 1
    for p in paths:
        with open(p) as f:
            jsonschema.validate(json.load(f), schema)
        print("ok", os.path.basename(p))
    return 0


if __name__ == "__main__":
    sys.exit(main())
