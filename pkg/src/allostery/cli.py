"""Command-line surface: build, verify, measure, compare, induce, urs, dehn.

Every command is reproducible: the run configuration is echoed verbatim into
the manifest, rationals are serialized as "p/q" strings (floats only appear
in CSV convenience columns), and identical configs with identical seeds
produce byte-identical output trees.

Exit codes: 0 success, 2 verification failure, 3 construction exhausted,
4 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import analysis, induction
from .actions import load_action, save_action, verify_action, quotient_map
from .construction import (
    BuildConfig,
    Chain,
    ChainLevel,
    SubgroupCertificate,
    build_chain,
    choose_rates,
    verify_certificate,
)
from .errors import AllosteryError, ConstructionExhausted, NotAQuotient
from .words import SurfacePresentation, dehn_is_trivial, presentation_from_json

EXIT_OK = 0
EXIT_VERIFY = 2
EXIT_EXHAUSTED = 3
EXIT_USAGE = 4

MANIFEST_FORMAT = "allostery-chain/1"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    presentation: dict
    t: str
    primes: list[int]
    depth: int
    d_cap_exp: int
    rank_cap: int
    retries: int
    seed: int
    urs_length: int

    def to_json_dict(self) -> dict:
        return {
            "presentation": self.presentation,
            "t": self.t,
            "primes": self.primes,
            "depth": self.depth,
            "dCap": self.d_cap_exp,
            "rankCap": self.rank_cap,
            "retries": self.retries,
            "seed": self.seed,
            "L": self.urs_length,
        }


def _dump_json(payload: dict, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def _parse_fraction(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational: {text!r}") from exc
    return value


def _presentation_from_args(args) -> SurfacePresentation:
    if args.size_a is not None or args.size_b is not None:
        if args.size_a is None or args.size_b is None:
            raise ValueError("--size-a and --size-b must be given together")
        return SurfacePresentation(args.size_a, args.size_b)
    if args.genus is None:
        raise ValueError("need --genus or --size-a/--size-b")
    if args.genus < 2:
        raise ValueError("genus must be >= 2")
    return SurfacePresentation(1, args.genus - 1)


# ---------------------------------------------------------------------------
# build
# ---------------------------------------------------------------------------


def cmd_build(args) -> int:
    try:
        pres = _presentation_from_args(args)
        t = _parse_fraction(args.t)
        if not 0 < t < 1:
            raise ValueError(f"t must lie strictly between 0 and 1, got {t}")
        primes = [int(p) for p in args.primes.split(",")]
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    config = BuildConfig(
        d_cap_exp=args.d_cap_exp,
        rank_cap=args.rank_cap,
        retries=args.retries,
        seed=args.seed,
    )
    run = RunConfig(
        presentation=pres.to_json_dict(),
        t=str(t),
        primes=primes,
        depth=args.depth,
        d_cap_exp=args.d_cap_exp,
        rank_cap=args.rank_cap,
        retries=args.retries,
        seed=args.seed,
        urs_length=args.urs_length,
    )
    try:
        chain = build_chain(pres, t, args.depth, config, primes=tuple(primes))
    except ConstructionExhausted as exc:
        print(
            json.dumps({"error": str(exc), "diagnostics": exc.diagnostics}, indent=2),
            file=sys.stderr,
        )
        return EXIT_EXHAUSTED
    os.makedirs(args.out, exist_ok=True)
    levels = []
    for lvl in chain.levels:
        lam_file = f"lambda_{lvl.n:02d}.json"
        chain_file = f"chain_{lvl.n:02d}.json"
        save_action(lvl.lam, os.path.join(args.out, lam_file))
        save_action(lvl.action, os.path.join(args.out, chain_file))
        levels.append(
            {
                "n": lvl.n,
                "p": lvl.p,
                "r": str(lvl.rate),
                "t_partial": str(lvl.t_partial),
                "gamma": str(lvl.gamma),
                "delta": str(lvl.delta),
                "lambda_action": lam_file,
                "chain_action": chain_file,
                "certificate": lvl.certificate.to_json_dict(),
            }
        )
    manifest = {
        "format": MANIFEST_FORMAT,
        "config": run.to_json_dict(),
        "presentation": pres.to_json_dict(),
        "t": str(t),
        "primes": primes,
        "depth": args.depth,
        "levels": levels,
    }
    path = os.path.join(args.out, "manifest.json")
    _dump_json(manifest, path)
    verified = _verify_manifest(path)
    if verified != EXIT_OK:
        return verified
    print(path)
    return EXIT_OK


# ---------------------------------------------------------------------------
# verify
# ---------------------------------------------------------------------------


def load_chain(manifest_path: str) -> Chain:
    """Rebuild an in-memory chain from a manifest and its action files."""
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    base = os.path.dirname(manifest_path)
    pres = presentation_from_json(manifest["presentation"])
    config = BuildConfig(
        d_cap_exp=manifest["config"]["dCap"],
        rank_cap=manifest["config"]["rankCap"],
        retries=manifest["config"]["retries"],
        seed=manifest["config"]["seed"],
    )
    chain = Chain(
        pres=pres,
        t=Fraction(manifest["t"]),
        primes=list(manifest["primes"]),
        depth=manifest["depth"],
        config=config,
    )
    for entry in manifest["levels"]:
        lam = load_action(os.path.join(base, entry["lambda_action"]))
        action = load_action(os.path.join(base, entry["chain_action"]))
        chain.levels.append(
            ChainLevel(
                n=entry["n"],
                p=entry["p"],
                rate=Fraction(entry["r"]),
                t_partial=Fraction(entry["t_partial"]),
                gamma=pres.word(entry["gamma"]),
                delta=pres.word(entry["delta"]),
                lam=lam,
                certificate=SubgroupCertificate.from_json_dict(entry["certificate"]),
                action=action,
            )
        )
    return chain


def _verify_manifest(manifest_path: str) -> int:
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    if manifest.get("format") != MANIFEST_FORMAT:
        print(f"error: unknown manifest format {manifest.get('format')!r}", file=sys.stderr)
        return EXIT_VERIFY
    chain = load_chain(manifest_path)
    t = Fraction(manifest["t"])
    rates = choose_rates(t, chain.primes, chain.depth)
    partial = Fraction(1)
    previous = chain.action(0)
    for lvl, (rate, _) in zip(chain.levels, rates):
        if lvl.rate != rate:
            print(f"error: level {lvl.n} rate {lvl.rate} != schedule {rate}", file=sys.stderr)
            return EXIT_VERIFY
        partial *= rate
        if lvl.t_partial != partial:
            print(f"error: level {lvl.n} partial product mismatch", file=sys.stderr)
            return EXIT_VERIFY
        for tag, act in (("lambda", lvl.lam), ("chain", lvl.action)):
            report = verify_action(act)
            if not report.ok:
                print(
                    f"error: level {lvl.n} {tag} action fails: {report.failures}",
                    file=sys.stderr,
                )
                return EXIT_VERIFY
        cert_report = verify_certificate(lvl.certificate, lvl.lam)
        if not cert_report.ok:
            print(
                f"error: level {lvl.n} certificate fails: {cert_report.checks}",
                file=sys.stderr,
            )
            return EXIT_VERIFY
        if lvl.action.degree != previous.degree * lvl.lam.degree:
            print(f"error: level {lvl.n} degree is not the product", file=sys.stderr)
            return EXIT_VERIFY
        try:
            quotient_map(lvl.action, previous)
            quotient_map(lvl.action, lvl.lam)
        except NotAQuotient as exc:
            print(f"error: level {lvl.n} quotient check: {exc}", file=sys.stderr)
            return EXIT_VERIFY
        previous = lvl.action
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        code = _verify_manifest(args.manifest)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    if code == EXIT_OK:
        print("ok")
    return code


# ---------------------------------------------------------------------------
# measure
# ---------------------------------------------------------------------------


def _wordset(chain: Chain, spec: str) -> tuple[list, list, str]:
    pres = chain.pres
    if spec == "gamma_A":
        return pres.gamma_a_generators(), [], "gamma_A"
    word = pres.word(spec)
    return [word], [], str(word) if word else "identity"


def cmd_measure(args) -> int:
    chain = load_chain(args.manifest)
    levels = (
        [int(x) for x in args.levels.split(",")]
        if args.levels
        else list(range(1, chain.depth + 1))
    )
    s_in, s_out, label = _wordset(chain, args.wordset)
    if args.out_words:
        s_out = [chain.pres.word(text) for text in args.out_words.split(";")]
    series = analysis.proportion_series(chain, s_in, s_out, levels, wordset_id=label)
    out = sys.stdout if args.out in (None, "-") else open(args.out, "w")
    try:
        out.write("level,degree,wordset,numerator,denominator,value\n")
        for level, degree, wordset_id, num, den, value in series.rows():
            out.write(f"{level},{degree},{wordset_id},{num},{den},{value!r}\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# compare / induce / urs / dehn
# ---------------------------------------------------------------------------


def cmd_compare(args) -> int:
    chain_s = load_chain(args.manifest_s)
    chain_t = load_chain(args.manifest_t)
    result = analysis.compare_chains(chain_s, chain_t, args.level)
    print(json.dumps(result.to_json_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_induce(args) -> int:
    chain = load_chain(args.manifest)
    try:
        ed = induction.orientation_double_cover(args.genus_prime)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if ed.base != chain.pres:
        print(
            f"error: chain presentation {chain.pres.to_json_dict()} does not match "
            f"the orientation subgroup of genus {args.genus_prime}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    report = induction.verify_embedding(ed)
    if not report.ok:
        print(f"error: embedding tables fail: {report.failures}", file=sys.stderr)
        return EXIT_VERIFY
    os.makedirs(args.out, exist_ok=True)
    levels = []
    for level in range(1, chain.depth + 1):
        induced = induction.induce(chain.action(level), ed)
        name = f"induced_{level:02d}.json"
        save_action(induced, os.path.join(args.out, name))
        value, (t_n, c_n) = induction.induced_gamma_a_measure(chain, ed, level)
        levels.append(
            {
                "n": level,
                "action": name,
                "gamma_A_measure": str(value),
                "t_n": str(t_n),
                "c_n": str(c_n),
            }
        )
    manifest = {
        "format": "allostery-induced/1",
        "source": os.path.basename(args.manifest),
        "genus_prime": args.genus_prime,
        "embedding": {
            "sigma": ed.sigma,
            "images": {k: str(v) for k, v in sorted(ed.images.items())},
            "conjugation": {
                f"{name}:{eps}": str(w) for (name, eps), w in sorted(ed.conjugation.items())
            },
        },
        "levels": levels,
    }
    path = os.path.join(args.out, "induced.json")
    _dump_json(manifest, path)
    print(path)
    return EXIT_OK


def cmd_urs(args) -> int:
    chain = load_chain(args.manifest)
    cert = analysis.urs_certificate(chain, args.length, chain.depth)
    print(json.dumps(cert.to_json_dict(), indent=2, sort_keys=True))
    return EXIT_OK if cert.ok else EXIT_VERIFY


def cmd_dehn(args) -> int:
    try:
        pres_data = json.loads(args.presentation)
        pres = presentation_from_json(pres_data)
        word = pres.word(args.word)
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    trivial, witness = dehn_is_trivial(pres, word)
    print(json.dumps({"trivial": trivial, "witness": str(witness)}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="allostery", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    build = sub.add_parser("build", help="build a certified chain")
    build.add_argument("--genus", type=int, help="orientable genus (split 1 | genus-1)")
    build.add_argument("--size-a", type=int, help="explicit |A|")
    build.add_argument("--size-b", type=int, help="explicit |B|")
    build.add_argument("--t", required=True, help='target measure, e.g. "1/2"')
    build.add_argument("--primes", required=True, help="comma-separated distinct primes")
    build.add_argument("--depth", type=int, required=True)
    build.add_argument("--seed", type=int, default=0)
    build.add_argument("--d-cap-exp", type=int, default=5)
    build.add_argument("--rank-cap", type=int, default=8)
    build.add_argument("--retries", type=int, default=32)
    build.add_argument("--urs-length", type=int, default=3)
    build.add_argument("--out", required=True, help="output directory")
    build.set_defaults(func=cmd_build)

    verify = sub.add_parser("verify", help="re-verify a manifest from disk")
    verify.add_argument("manifest")
    verify.set_defaults(func=cmd_verify)

    measure = sub.add_parser("measure", help="exact cylinder measures as CSV")
    measure.add_argument("manifest")
    measure.add_argument("--wordset", default="gamma_A", help='"gamma_A", a word, or "" for the identity')
    measure.add_argument("--out-words", help="semicolon-separated words required to move the point")
    measure.add_argument("--levels", help="comma-separated levels (default: all)")
    measure.add_argument("--out", help="CSV path (default stdout)")
    measure.set_defaults(func=cmd_measure)

    compare = sub.add_parser("compare", help="exact gap between two chains")
    compare.add_argument("manifest_s")
    compare.add_argument("manifest_t")
    compare.add_argument("--level", type=int, required=True)
    compare.set_defaults(func=cmd_compare)

    induce = sub.add_parser("induce", help="induce a chain to the non-orientable group")
    induce.add_argument("manifest")
    induce.add_argument("--genus-prime", type=int, required=True)
    induce.add_argument("--out", required=True)
    induce.set_defaults(func=cmd_induce)

    urs = sub.add_parser("urs", help="triviality certificate for short words")
    urs.add_argument("manifest")
    urs.add_argument("--length", type=int, default=3)
    urs.set_defaults(func=cmd_urs)

    dehn = sub.add_parser("dehn", help="word-problem utility")
    dehn.add_argument("--presentation", required=True, help='e.g. \'{"type":"orientable","sizeA":1,"sizeB":1}\'')
    dehn.add_argument("--word", required=True)
    dehn.set_defaults(func=cmd_dehn)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConstructionExhausted as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED
    except AllosteryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VERIFY


if __name__ == "__main__":
    sys.exit(main())
