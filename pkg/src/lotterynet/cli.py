"""Command-line entry point: ``lotterynet network|run|cost|fairness``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

from . import cost as costmod
from .bulletin import Board
from .commitments import DEFAULT_PARAMS, SecurityParams
from .errors import InvalidArgument, LotteryError
from .network import (
    PayoutFunction, build_general, build_tournament_tree, depth, dumps, network_from_json,
    network_to_json, payout_from_json, verify_correct, verify_monotonic,
)
from .privacy import run_coop
from .protocol.perfect import run_perfect_shuffle
from .protocol.lottery import HIDDEN, LotteryConfig, Schedule, run_lottery
from .sim import Combined, Strategy, exact_fairness_analysis, run_monte_carlo

OUT_ENV = "LOTTERYNET_OUT"


def out_dir(args) -> Path:
    path = Path(args.out_dir or os.environ.get(OUT_ENV) or ".")
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- argument parsing helpers ---------------------------------------------------------

def parse_payout(spec: str, n: int) -> PayoutFunction:
    """``single``, ``top[:k]``, ``linear``, ``uniform``, ``a,b,...`` or a JSON payout file."""
    if spec == "single":
        return PayoutFunction.single_winner(n)
    if spec == "linear":
        return PayoutFunction.linear(n)
    if spec == "uniform":
        return PayoutFunction.uniform(n)
    if spec == "top" or spec.startswith("top:"):
        return PayoutFunction.top(n, int(spec[4:]) if spec.startswith("top:") else None)
    if os.path.exists(spec):
        return payout_from_json(json.loads(Path(spec).read_text()))
    try:
        return PayoutFunction(Fraction(x) for x in spec.split(","))
    except (ValueError, ZeroDivisionError) as exc:
        raise InvalidArgument(f"cannot parse payout {spec!r}") from exc


def parse_weights(path: str) -> list[Fraction]:
    try:
        data = json.loads(Path(path).read_text())
        return [Fraction(w) for w in (data["weights"] if isinstance(data, dict) else data)]
    except (OSError, ValueError, KeyError, TypeError, ZeroDivisionError) as exc:
        raise InvalidArgument(f"cannot read weights from {path}: {exc}") from exc


def _round_set(text: str) -> frozenset[int]:
    out: set[int] = set()
    for part in text.split("+"):
        if "-" in part:
            lo, hi = part.split("-", 1)
            out.update(range(int(lo), int(hi) + 1))
        else:
            out.add(int(part))
    return frozenset(out)


def parse_adversary(spec: str | None):
    """``abort:id=3,round=1`` entries separated by ``;``.

    ``round`` accepts ``a-b`` ranges and ``+``-joined lists; omitting it
    aborts every round.
    """
    if not spec:
        return None
    by_id: dict[int, frozenset | None] = {}
    for item in spec.split(";"):
        item = item.strip()
        if not item:
            continue
        kind, _, rest = item.partition(":")
        if kind != "abort":
            raise InvalidArgument(f"unknown adversary kind {kind!r}")
        fields = dict(kv.split("=", 1) for kv in rest.split(",") if kv)
        if "id" not in fields or set(fields) - {"id", "round"}:
            raise InvalidArgument(f"adversary entry {item!r} needs id= and optional round=")
        try:
            pid = int(fields["id"])
            rounds = _round_set(fields["round"]) if "round" in fields else None
        except ValueError as exc:
            raise InvalidArgument(f"bad adversary entry {item!r}") from exc
        if pid in by_id:
            old = by_id[pid]
            rounds = None if old is None or rounds is None else old | rounds
        by_id[pid] = rounds
    strategies = [Strategy.abort_at({pid}, rounds if rounds is not None else _always)
                  for pid, rounds in sorted(by_id.items())]
    return Combined(strategies)


def _always(r: int) -> bool:
    return True


def parse_n_range(text: str) -> list[int]:
    if ".." in text:
        lo, hi = (int(x) for x in text.split("..", 1))
        out, n = [], 1
        while n <= hi:
            if n >= lo:
                out.append(n)
            n *= 2
        return out
    return [int(text)]


def params_for(lam: int | None) -> SecurityParams:
    return DEFAULT_PARAMS if lam is None else SecurityParams(lam=lam, reduced=lam < 128)


def _json_owner(o):
    return "hidden" if o is HIDDEN else o


# --- subcommands --------------------------------------------------------------------------

def cmd_network(args) -> int:
    if args.action == "verify":
        try:
            net = network_from_json(json.loads(Path(args.file).read_text()))
        except (OSError, ValueError) as exc:
            raise InvalidArgument(f"cannot read network file: {exc}") from exc
        payout = parse_payout(args.payout, net.n)
        k = net.n.bit_length() - 1
        bound = k if net.n == 1 << k else 2 * k + 1
        verdicts = {
            "correctness": verify_correct(net),
            "monotonic": verify_monotonic(net, payout),
            "depth": depth(net) <= bound,
        }
        for name, ok in verdicts.items():
            print(f"{name}: {'PASS' if ok else 'FAIL'}")
        print(f"depth = {depth(net)} (bound {bound})")
        return 0 if all(verdicts.values()) else 1
    if args.n is None:
        raise InvalidArgument("--n is required")
    payout = parse_payout(args.payout, args.n)
    net = build_tournament_tree(args.n) if args.kind == "tree" else build_general(args.n, payout)
    text = dumps(network_to_json(net)) + "\n"
    if args.action == "export" and args.out is None:
        sys.stdout.write(text)
        return 0
    path = Path(args.out) if args.out else out_dir(args) / f"network-{args.n}.json"
    write_atomic(path, text)
    print(f"wrote {path} (n = {net.n}, depth = {depth(net)}, swappers = {net.size})")
    return 0


def _config(args, payout: PayoutFunction, weights) -> LotteryConfig:
    params = params_for(args.lam)
    if args.protocol == "single":
        return LotteryConfig.single_winner(args.n, weights, params=params)
    return LotteryConfig(args.n, build_general(args.n, payout), payout, weights=weights, params=params)


def cmd_run(args) -> int:
    if args.n < 2:
        raise InvalidArgument("--n must be at least 2")
    payout = parse_payout(args.payout, args.n)
    if len(payout) != args.n:
        raise InvalidArgument(f"payout has {len(payout)} ranks but n = {args.n}")
    weights = parse_weights(args.weights) if args.weights else None
    if weights is not None and args.protocol in ("coop", "perfect"):
        raise InvalidArgument(f"{args.protocol} runs are unweighted")
    policy = parse_adversary(args.adversary)
    dest = out_dir(args)
    stem = f"{args.protocol}-n{args.n}-s{args.seed}"
    if args.trials > 1:
        if args.protocol not in ("single", "tyche"):
            raise InvalidArgument("Monte Carlo batches support single and tyche")
        cfg = _config(args, payout, weights)
        rep = run_monte_carlo(cfg, policy.strategies if policy else None, args.trials, args.seed, args.workers)
        write_atomic(dest / f"{stem}-aggregate.csv", rep.to_csv())
        write_atomic(dest / f"{stem}-aggregate.json", json.dumps(rep.to_json(), indent=1) + "\n")
        sys.stdout.write(rep.to_csv())
        return 0
    board = Board()
    report: dict = {"protocol": args.protocol, "n": args.n, "seed": args.seed}
    if args.protocol == "perfect":
        placements = run_perfect_shuffle(board, args.n, args.seed, policy, params_for(args.lam), payout)
        report["placements"] = list(placements)
        print("placements:", " ".join(str(p) for p in placements))
    elif args.protocol == "coop":
        cfg = _config(args, payout, None)
        _, crep = run_coop(board, cfg, args.seed, policy=policy)
        report.update(crep.payout.to_json())
        report["cooperative_records"] = crep.cooperative
        report["unilateral_opens"] = crep.unilateral
        report["timeouts"] = [[r, m, t.point, t.waiting_on] for r, m, t in crep.timeouts]
        print(f"cooperative records: {crep.cooperative}, unilateral opens: {crep.unilateral}")
        print("payouts:", json.dumps([[_json_owner(k), v] for k, v in crep.payout.payouts.items()]))
    else:
        cfg = _config(args, payout, weights)
        rep = run_lottery(board, cfg, Schedule(args.seed, policy))
        report.update(rep.to_json())
        print(f"winner: {rep.winner}")
    report["messages"] = len(board.messages)
    write_atomic(dest / f"{stem}-report.json", json.dumps(report, indent=1, default=str) + "\n")
    write_atomic(dest / f"{stem}-trace.jsonl", board.dumps_trace())
    print(f"trace: {dest / (stem + '-trace.jsonl')}")
    return 0


def cmd_cost(args) -> int:
    sizes = parse_n_range(args.n)
    if not sizes:
        raise InvalidArgument("empty n range")
    model = costmod.CostModel(args.base, args.per_byte)
    rows = [costmod.cost_row(args.protocol, n, args.seed, model) for n in sizes]
    csv = costmod.to_csv(rows)
    sys.stdout.write(csv)
    dest = out_dir(args)
    tag = f"{args.protocol}-{sizes[0]}-{sizes[-1]}"
    write_atomic(dest / f"cost-{tag}.csv", csv)
    if args.sweep or len(rows) > 1:
        write_atomic(dest / f"cost-{tag}.dat", costmod.plot_data(rows))
    return 0


def cmd_fairness(args) -> int:
    params = params_for(args.lam)
    payout = parse_payout(args.payout, args.n)
    net = build_tournament_tree(args.n) if args.network == "tree" else build_general(args.n, payout)
    cfg = LotteryConfig(args.n, net, payout, params=params)
    coalition = {int(x) for x in args.coalition.split(",") if x}
    res = exact_fairness_analysis(cfg, coalition, args.target, args.mode)
    print(f"mode: {res.mode}")
    print(f"value: {res.value}  honest: {res.honest}  fair: {'PASS' if res.fair else 'FAIL'}")
    return 0 if res.fair else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lotterynet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out-dir", help=f"output directory (default ${OUT_ENV} or .)")

    p = sub.add_parser("network", help="build, verify or export shuffling networks")
    p.add_argument("action", choices=("build", "verify", "export"))
    p.add_argument("file", nargs="?", help="network file for verify")
    p.add_argument("--n", type=int)
    p.add_argument("--payout", default="single")
    p.add_argument("--kind", choices=("general", "tree"), default="general")
    p.add_argument("--out")
    common(p)
    p.set_defaults(func=cmd_network)

    p = sub.add_parser("run", help="run one lottery or a Monte Carlo batch")
    p.add_argument("--protocol", choices=("single", "tyche", "coop", "perfect"), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--payout", default="single")
    p.add_argument("--weights")
    p.add_argument("--adversary")
    p.add_argument("--trials", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--lam", type=int)
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("cost", help="transaction counts, traced and predicted")
    p.add_argument("--protocol", choices=costmod.PROTOCOLS, required=True)
    p.add_argument("--n", required=True, help="N or LO..HI (powers of two)")
    p.add_argument("--sweep", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--base", type=int, default=1)
    p.add_argument("--per-byte", type=int, default=0)
    common(p)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("fairness", help="exact abort-game analysis")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--network", choices=("general", "tree"), default="general")
    p.add_argument("--payout", default="single")
    p.add_argument("--coalition", default="")
    p.add_argument("--target", type=int)
    p.add_argument("--mode", choices=("min-target", "max-coalition"), default="min-target")
    p.add_argument("--lam", type=int, default=4)
    p.set_defaults(func=cmd_fairness)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except LotteryError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
