# The same pipeline through the command line interface: validate a
# config, solve the measure change, run a verification suite, and pretty
# print the stored summary.  Every subcommand writes summary.json plus a
# manifest into the chosen output directory, so runs are reproducible.

import tempfile
from pathlib import Path

from levymart.cli_reporting import main

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "run"

    print("$ levymart model validate --model merton_jump")
    code = main(["model", "validate", "--model", "merton_jump", "--out", str(out)])
    print(f"  -> exit {code}\n")

    print("$ levymart measure solve --model merton_jump --divergence power:0.5")
    code = main(["measure", "solve", "--model", "merton_jump",
                 "--divergence", "power:0.5", "--out", str(out)])
    print(f"  -> exit {code}\n")

    print("$ levymart verify run --model merton_jump --suite martingale")
    code = main(["verify", "run", "--model", "merton_jump",
                 "--suite", "martingale", "--out", str(out)])
    print(f"  -> exit {code}\n")

    print("$ levymart report")
    code = main(["report", str(out)])
    print(f"  -> exit {code}\n")

    files = ", ".join(sorted(p.name for p in out.iterdir()))
    print(f"artifacts in {out.name}/: {files}")

    # misconfiguration surfaces as exit code 2 with a config error
    print("\n$ levymart measure solve --model no_such_config")
    code = main(["measure", "solve", "--model", "no_such_config",
                 "--out", str(out)])
    print(f"  -> exit {code}")
