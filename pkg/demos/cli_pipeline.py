"""The command line on files written to a temporary directory.

Semigroups are stored as generators (the matrix G and jump operators), step
channels as Kraus lists. The pipeline builds, dilates and verifies in
one pass; an indefinite kernel ends with exit code 3.
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from cpdil import io
from cpdil.channel import from_kraus
from cpdil.cli import main
from cpdil.strongcomm import make_aut_cp_pair

with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    r, s = make_aut_cp_pair(2, seeds=0)
    io.write_json(tmp / "r.json", io.semigroup_to_doc(r))
    io.write_json(tmp / "s.json", io.semigroup_to_doc(s))
    nil = from_kraus([np.array([[0, 1], [0, 0]], dtype=complex)])
    io.write_json(tmp / "nil.json", io.channel_to_doc(nil))
    print("r.json:", json.dumps(io.read_json(tmp / "r.json"))[:100], "...")

    print("\n$ cpdil pipeline r.json s.json --level 1 --radius 2 --out dil.json")
    code = main(["pipeline", str(tmp / "r.json"), str(tmp / "s.json"),
                 "--level", "1", "--radius", "2", "--out", str(tmp / "dil.json")])
    print("exit", code)

    print("\n$ cpdil verify dil.json")
    print("exit", main(["verify", str(tmp / "dil.json")]))

    print("\n$ cpdil pipeline nil.json nil.json --radius 2")
    print("exit", main(["pipeline", str(tmp / "nil.json"), str(tmp / "nil.json"), "--radius", "2"]))
