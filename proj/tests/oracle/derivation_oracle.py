#!/usr/bin/env python3
"""Brute-force oracle for the identity/time key derivation chain.

Recomputes, with plain Python integers and string concatenation, every value
the C++ keyforge module derives:

  encode(s)        = int("".join("%03d" % ord(c) for c in s))
  case             = (disk + moboard) * pwd
  processed_min    = (minute + p) * q^2          q = next prime after p
  processed_hour   = hour + processed_min * 2^n  n = (hour % 6) + 1
  time_case        = processed_min * processed_hour * case

Emits tests/data/derivation_cases.txt: one case per line, fields separated by
single spaces, strings as <len>:<bytes>, integers in decimal.

  mobo disk pwd p minute hour moboard_num disk_no pwd_num case pm ph tc

Regenerate with:  python3 tests/oracle/derivation_oracle.py
"""

import os
import random

NEXT_PRIME = {2: 3, 3: 5, 5: 7, 7: 11}


def encode(s: str) -> int:
    assert s and all(32 <= ord(c) <= 126 for c in s)
    return int("".join("%03d" % ord(c) for c in s))


def processed_min(minute: int, p: int) -> int:
    q = NEXT_PRIME[p]
    return (minute + p) * q * q


def processed_hour(hour: int, pm: int) -> int:
    n = (hour % 6) + 1
    return hour + pm * (2 ** n)


def netstring(s: str) -> str:
    b = s.encode("ascii")
    return "%d:%s" % (len(b), s)


def random_identity_string(rng: random.Random) -> str:
    length = rng.randint(1, 14)
    return "".join(chr(rng.randint(32, 126)) for _ in range(length))


def main() -> None:
    rng = random.Random(0x5EED_CA5E)
    out_path = os.path.join(os.path.dirname(__file__), "..", "data",
                            "derivation_cases.txt")
    lines = []
    # A few pinned edge cases first, then random fill to 1000.
    pinned = [
        ("A", "B", "C", 7, 0, 0),
        (" ", " ", " ", 2, 59, 23),
        ("~", "~", "~", 5, 30, 10),
        ("A", "AB", "ABC", 3, 1, 6),
    ]
    cases = list(pinned)
    while len(cases) < 1000:
        cases.append((random_identity_string(rng),
                      random_identity_string(rng),
                      random_identity_string(rng),
                      rng.choice([2, 3, 5, 7]),
                      rng.randint(0, 59),
                      rng.randint(0, 23)))

    for mobo, disk, pwd, p, minute, hour in cases:
        moboard_num = encode(mobo)
        disk_no = encode(disk)
        pwd_num = encode(pwd)
        case = (disk_no + moboard_num) * pwd_num
        pm = processed_min(minute, p)
        ph = processed_hour(hour, pm)
        tc = pm * ph * case
        lines.append(" ".join([
            netstring(mobo), netstring(disk), netstring(pwd),
            str(p), str(minute), str(hour),
            str(moboard_num), str(disk_no), str(pwd_num),
            str(case), str(pm), str(ph), str(tc),
        ]))

    with open(os.path.abspath(out_path), "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
    print("wrote %d cases to %s" % (len(lines), out_path))


if __name__ == "__main__":
    main()
