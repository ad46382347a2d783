"""Oblivious AES-128 timing table without installing the console script.

Runs both parties in one process and prints per-block offline/online times
and throughput; `--blocks`, `--psi`, `--kappa`, `--bucket`, `--chunk`,
`--seed`, and `--json` are forwarded unchanged (see --help).
"""

import sys

from macbits.cli import main

if __name__ == "__main__":
    sys.exit(main(["bench-aes", *sys.argv[1:]]))
