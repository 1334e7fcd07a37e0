"""netcert: self-testing of multipartite quantum states in network-assisted scenarios.

Command-line front end with four subcommands:

    simulate  state file -> behavior file of the reference experiment
    certify   behavior file + state file -> certification report (exit 0 pass / 1 fail)
    extract   adversary model + state file -> extraction report (alpha, fidelity)
    pt        state file + site subset -> partial-transpose spectrum listing

Exit code 2 signals malformed input of any kind.
"""
import argparse
import json
import logging
import sys

from config.settings import DEFAULT_TOL_ALIGN, DEFAULT_TOL_CHSH, DEFAULT_TOL_TOMO
from core.adversary import AdversaryKind, make_model
from core.behavior import behavior_of, certification_inputs, reference_behavior
from core.certifier import Tolerance, certify
from core.errors import DimensionMismatchError, InputError, NumericalError
from core.extraction import extraction_channel
from core.gates import encode_qudit
from core.network import Scenario, Variant
from core.tensor import PureState
from core.tomography import pt_listing
from data.persistence import load_behavior, load_state, save_behavior, save_report
from utils.export import (
    export_certification_report_text,
    export_extraction_report_text,
    export_pt_report_text,
    write_behavior_csv,
)
from utils.formatting import parse_sites
from utils.log_setup import setup_logging

logger = logging.getLogger("netcert")

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_INPUT = 2


def _load_target(path: str, encode: bool) -> PureState:
    psi = load_state(path)
    if psi.layout.is_qubits:
        return psi
    if not encode:
        raise DimensionMismatchError(
            f"target has local dimensions {psi.layout.local_dims}; pass --encode-qudit to encode it in qubits")
    encoded = encode_qudit(psi)
    logger.info("Encoded %d qudit sites into %d qubits", psi.layout.num_sites, encoded.layout.num_sites)
    return encoded


def _resolve_kind(args) -> AdversaryKind:
    if ":" in args.kind:
        return AdversaryKind.parse(args.kind)
    return AdversaryKind(args.kind.lower(), alpha=args.alpha, seed=args.seed,
                         visibility=args.visibility, pair=args.pair)


# ─── Subcommands ──────────────────────────────────────────────────────────────

def cmd_simulate(args) -> int:
    psi = _load_target(args.state, args.encode_qudit)
    scenario = Scenario(Variant.parse(args.variant), psi.layout.num_sites)
    inputs = certification_inputs(scenario) if args.minimal else None
    behavior = reference_behavior(psi, scenario, inputs, threads=args.threads)
    save_behavior(args.out, behavior)
    if args.csv:
        write_behavior_csv(args.csv, behavior)
    print(f"Wrote {len(behavior.input_tuples)} input rows ({scenario.variant.value} N={scenario.n}) to {args.out}")
    return EXIT_PASS


def cmd_certify(args) -> int:
    behavior = load_behavior(args.behavior)
    psi = _load_target(args.state, args.encode_qudit)
    tol = Tolerance(args.tol_chsh, args.tol_tomo, args.tol_align)
    report = certify(behavior, psi, tol)
    data = report.to_dict()
    if args.out:
        save_report(args.out, data)
    print(export_certification_report_text(data))
    return EXIT_PASS if report.passed else EXIT_FAIL


def cmd_extract(args) -> int:
    psi = _load_target(args.state, args.encode_qudit)
    scenario = Scenario(Variant.parse(args.variant), psi.layout.num_sites)
    kind = _resolve_kind(args)
    model = make_model(kind, psi, scenario)
    pre = None
    if not args.no_certify:
        behavior = behavior_of(model, certification_inputs(scenario), threads=args.threads)
        pre = certify(behavior, psi)
        if not pre.passed:
            data = pre.to_dict()
            if args.out:
                save_report(args.out, {"model": kind.describe(), "certification": data})
            print(export_certification_report_text(data))
            print(f"Model {kind.describe()} fails certification; extraction skipped")
            return EXIT_FAIL
    result = extraction_channel(model)
    data = {
        "model": kind.describe(),
        "variant": scenario.variant.value,
        "n": scenario.n,
        **result.to_dict(),
        "certification": pre.to_dict() if pre is not None else None,
    }
    if args.out:
        save_report(args.out, data)
    print(export_extraction_report_text(data))
    return EXIT_PASS


def cmd_pt(args) -> int:
    psi = _load_target(args.state, args.encode_qudit)
    try:
        subset = parse_sites(args.subset)
    except ValueError as exc:
        raise InputError(f"bad --subset {args.subset!r}: {exc}")
    listing = pt_listing(psi, subset)
    if args.out:
        save_report(args.out, listing)
    print(export_pt_report_text(listing))
    return EXIT_PASS


# ─── Parser ───────────────────────────────────────────────────────────────────

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netcert", description=__doc__.splitlines()[0])
    parser.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING (default: NETCERT_LOG_LEVEL)")
    sub = parser.add_subparsers(dest="command", required=True)

    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--encode-qudit", action="store_true", help="encode d-level sites in ceil(log2 d) qubits")
    shared.add_argument("--seed", type=int, default=0, help="seed of randomized models (isometry Haar draws)")
    shared.add_argument("--out", default=None, help="output file")

    p = sub.add_parser("simulate", parents=[shared], help="behavior of the reference experiment")
    p.add_argument("state", help="state file (JSON)")
    p.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.NETWORK.value)
    p.add_argument("--minimal", action="store_true", help="only the rows read by the certifier")
    p.add_argument("--csv", default=None, help="also write the long-format table as CSV")
    p.add_argument("--threads", type=int, default=None, help="override NETCERT_THREADS")
    p.set_defaults(func=cmd_simulate, out_required=True)

    p = sub.add_parser("certify", parents=[shared], help="certify a behavior against a target state")
    p.add_argument("behavior", help="behavior file (JSON)")
    p.add_argument("state", help="state file (JSON)")
    p.add_argument("--tol-chsh", type=float, default=DEFAULT_TOL_CHSH)
    p.add_argument("--tol-tomo", type=float, default=DEFAULT_TOL_TOMO)
    p.add_argument("--tol-align", type=float, default=DEFAULT_TOL_ALIGN)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("extract", parents=[shared], help="run the extraction channel on a model")
    p.add_argument("state", help="state file (JSON)")
    p.add_argument("--variant", choices=[v.value for v in Variant], default=Variant.NETWORK.value)
    p.add_argument("--kind", default="reference",
                   help="reference | conjugate | flagged | isometry | noisy, or the full form e.g. flagged:0.3")
    p.add_argument("--alpha", type=float, default=1.0, help="flagged: weight of the psi branch")
    p.add_argument("--visibility", type=float, default=1.0, help="noisy: Werner visibility")
    p.add_argument("--pair", type=int, default=1, help="noisy: 1-based pair index")
    p.add_argument("--no-certify", action="store_true", help="skip the certification pre-check")
    p.add_argument("--threads", type=int, default=None, help="override NETCERT_THREADS")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("pt", parents=[shared], help="partial-transpose spectrum of a state")
    p.add_argument("state", help="state file (JSON)")
    p.add_argument("--subset", default="0", help="comma-separated 0-based sites (default: 0)")
    p.set_defaults(func=cmd_pt)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "out_required", False) and not args.out:
        parser.error(f"{args.command} requires --out")
    setup_logging(args.log_level)
    try:
        return args.func(args)
    except (InputError, NumericalError, OSError, json.JSONDecodeError) as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
