#!/usr/bin/env python3
"""Validate every fixture config against the JSON schema."""
import json
import pathlib
import sys

import jsonschema


def main():
    schema = json.loads(pathlib.Path(sys.argv[1]).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    configs = sorted(pathlib.Path(sys.argv[2]).glob("*.json"))
    if not configs:
        print("no configs found")
        return 1
    bad = 0
    for path in configs:
        errors = list(validator.iter_errors(json.loads(path.read_text())))
        for e in errors:
            print(f"{path.name}: {'/'.join(map(str, e.path))}: {e.message}")
        bad += bool(errors)
        print(f"{path.name}: {'ok' if not errors else 'INVALID'}")
    # A config with an unknown key must be rejected.
    probe = json.loads(configs[0].read_text())
    probe["unexpected_key"] = 1
    if validator.is_valid(probe):
        print("schema accepted an unknown key")
        bad += 1
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
