"""End-to-end checks of the command-line tool on the shipped corpus.

usage: cli_test.py PATH_TO_DOWNCLOSE CORPUS_DIR
"""

import json
import os
import subprocess
import sys
import tempfile

BIN, CORPUS = os.path.abspath(sys.argv[1]), os.path.abspath(sys.argv[2])
failures = []


def run(*args):
    return subprocess.run([BIN, *args], capture_output=True, text=True, cwd=CORPUS)


def expect(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        failures.append(what)


def check_order(order, u, v, out, code):
    r = run("check-order", "--alphabet", "ex31.alphabet.json", "--order", order, u, v)
    expect(r.stdout.strip() == out and r.returncode == code, f"check-order {order} [{u}] [{v}] -> {out}")


check_order("block", "1a,1b", "1a,2a,1b", "false", 1)
check_order("block", "1a,0a", "1a,1b,0a", "true", 0)
check_order("priority", "1a,0a", "1a,1b,0a", "false", 1)
check_order("subword", "", "0a", "true", 0)
check_order("block", "", "1a", "false", 1)
expect(run("check-order", "--alphabet", "ex31.alphabet.json", "x", "0a").returncode == 2, "unknown letter exits 2")


def enumerate_words(kind, alphabet, model, n):
    r = run("enumerate", "--type", kind, "--alphabet", alphabet, "--input", model, "--bound", str(n))
    return r.returncode, r.stdout.splitlines()


expect(enumerate_words("cfg", "d12.alphabet.json", "x1x1.cfg.json", 3) == (0, ["2", "1,2,1"]), "enumerate cfg")
expect(enumerate_words("oca", "ab01.alphabet.json", "anbn.oca.json", 4) == (0, ["", "a,b", "a,a,b,b"]),
       "enumerate oca")
expect(enumerate_words("nfa", "ab01.alphabet.json", "a_star.nfa.json", 1) == (0, ["", "a"]), "enumerate nfa")

with tempfile.TemporaryDirectory() as tmp:
    def closure_words(kind, order, alphabet, model, n):
        out = os.path.join(tmp, "closure.json")
        r = run("closure", "--type", kind, "--order", order, "--alphabet", alphabet, "--input", model,
                "--output", out, "--dot", os.path.join(tmp, "closure.dot"))
        if r.returncode != 0:
            return None
        return enumerate_words("nfa", alphabet, out, n)[1]

    expect(closure_words("nfa", "priority", "ex31.alphabet.json", "ex31_word.nfa.json", 3)
           == ["", "1b,0a", "0a,1b,0a"], "priority closure of one word")
    expect(closure_words("oca", "block", "ab01.alphabet.json", "anbn.oca.json", 3)
           == ["", "b", "a,b", "b,b", "a,a,b", "a,b,b", "b,b,b"], "block closure of a^n b^n")
    # the first and last sub-2 blocks of every word are nonempty
    expect(closure_words("cfg", "block", "d12.alphabet.json", "x1x1.cfg.json", 5)
           == ["2", "1,2,1", "1,1,2,1", "1,2,1,1", "1,1,1,2,1", "1,1,2,1,1", "1,2,1,1,1"],
           "block closure of X -> 1 X 1 | 2")
    with open(os.path.join(tmp, "closure.dot")) as f:
        expect(f.read().startswith("digraph"), "closure writes DOT")

    first = run("closure", "--type", "cfg", "--order", "priority", "--alphabet", "d12.alphabet.json",
                "--input", "x1x1.cfg.json")
    second = run("closure", "--type", "cfg", "--order", "priority", "--alphabet", "d12.alphabet.json",
                 "--input", "x1x1.cfg.json")
    expect(first.returncode == 0 and first.stdout == second.stdout, "closure output is deterministic")

with open(os.path.join(CORPUS, "manifest.json")) as f:
    manifest = json.load(f)


def report(args):
    r = run("verify", *args)
    try:
        return r.returncode, json.loads(r.stdout)
    except json.JSONDecodeError:
        return r.returncode, {}


for m in manifest["models"]:
    for order in m["orders"]:
        args = ["--type", m["type"], "--alphabet", m["alphabet"], "--input", m["input"], "--order", order,
                "--bound", "6"]
        if "domBound" in m:
            args += ["--dom-bound", str(m["domBound"])]
        code, rep = report(args)
        expect(code == 0 and rep.get("equal") is True, f"verify {m['input']} over {m['alphabet']}, {order}")

for f in manifest["faults"]:
    code, rep = report(["--type", f["type"], "--alphabet", f["alphabet"], "--input", f["input"], "--order",
                        f["order"], "--closure", f["closure"], "--bound", str(f["bound"])])
    expect(code == 1 and rep.get("missingWords"), f"fault {f['closure']} is detected")

code, rep = report(["--type", "nfa", "--alphabet", "ex31.alphabet.json", "--input", "ex31_word.nfa.json",
                    "--order", "block", "--bound", "0"])
expect(code == 0 and rep.get("bound") == 0, "verify at bound 0")
a = report(["--type", "oca", "--alphabet", "ab01.alphabet.json", "--input", "anbn.oca.json", "--bound", "5"])[1]
b = report(["--type", "oca", "--alphabet", "ab01.alphabet.json", "--input", "anbn.oca.json", "--bound", "5"])[1]
a.pop("timings", None)
b.pop("timings", None)
expect(a == b and a, "reports agree apart from timings")
expect(run("verify", "--type", "nfa", "--alphabet", "ab01.alphabet.json", "--input", "a_star.nfa.json",
           "--bound", "5", "--dom-bound", "4").returncode == 2, "dominator bound below bound exits 2")

r = run("render", "--type", "oca", "--alphabet", "ab01.alphabet.json", "--input", "anbn.oca.json")
expect(r.returncode == 0 and r.stdout.startswith("digraph") and "inc" in r.stdout, "render oca")
expect(run("render", "--type", "cfg", "--alphabet", "d12.alphabet.json", "--input", "x1x1.cfg.json").returncode == 2,
       "render rejects grammars")
expect(run("closure", "--type", "nfa", "--alphabet", "ab01.alphabet.json", "--input", "x1x1.cfg.json").returncode == 2,
       "wrong model type exits 2")
expect(run("closure").returncode == 2, "missing flags exit 2")

print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)
