"""Copy the packaged JSON schemas to ``docs/schemas/``."""

import shutil
from importlib import resources
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "docs" / "schemas"


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    for f in sorted(resources.files("fdboundary").joinpath("schemas").iterdir()):
        if f.name.endswith(".schema.json"):
            shutil.copyfile(f, OUT / f.name)
            print(OUT / f.name)


if __name__ == "__main__":
    main()
