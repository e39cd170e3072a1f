"""Command-line entry point.

Subcommands:

* ``validate`` - check a netlist document and list violations.
* ``mom``      - model-only truth-table sweep, optional report emission.
* ``mrm``      - full verification: MOM sweep vs MRM sweep against an
  emulated board (in-process loopback or a remote ``shia board``), with
  Karnaugh map subtraction; exit 0 only on a zero-discrepancy verdict.
* ``board``    - serve the emulated board on a TCP address.
* ``panel``    - run the interactive stack (model server + panel service,
  optionally a loopback board) and print the panel URL.

The last line of output is always machine-parsable:
``RESULT cmd=<name> status=<pass|fail> key=value ...``.
"""

from __future__ import annotations

import argparse
import socket
import sys

from .board_server import BoardServer, FaultSpec
from .clock import RealClock, VirtualClock
from .harness import (
    MrmSession,
    diff_kmaps,
    emit_report,
    kmaps_for,
    mom_sweep,
    mrm_sweep,
    open_loopback_session,
    render_diff,
)
from .logic.netlist import NetlistError, read_netlist, validate_netlist
from .logic.reference import reference_netlist
from .model_server import Mode, ModelServer, set_mode
from .panel_service import DEFAULT_PORT, PanelService
from .transport import Transcript, connect_stream, listen_stream

RESULT_PREFIX = "RESULT"


def _result(cmd: str, ok: bool, **extra) -> str:
    pairs = " ".join(f"{k}={v}" for k, v in extra.items())
    status = "pass" if ok else "fail"
    return f"{RESULT_PREFIX} cmd={cmd} status={status}" + (f" {pairs}" if pairs else "")


def _load_net(args):
    if args.netlist:
        return read_netlist(args.netlist)
    return reference_netlist()


def _parse_faults(text: str | None) -> tuple[FaultSpec, ...]:
    if not text:
        return ()
    return tuple(FaultSpec.parse(item) for item in text.split(",") if item)


def _add_netlist_flag(parser):
    parser.add_argument(
        "--netlist",
        metavar="FILE",
        help="netlist document (default: the built-in reference chassis)",
    )


def cmd_validate(args) -> int:
    try:
        net = _load_net(args)
    except NetlistError as exc:
        for line in str(exc).split("; "):
            print(f"violation: {line}")
        print(_result("validate", False, reason="invalid"))
        return 1
    violations = validate_netlist(net)
    for v in violations:
        print(f"violation: {v}")
    ok = not violations
    print(_result("validate", ok, netlist=net.name))
    return 0 if ok else 1


def cmd_mom(args) -> int:
    try:
        net = _load_net(args)
    except NetlistError as exc:
        print(f"netlist error: {exc}")
        print(_result("mom", False, reason="invalid-netlist"))
        return 1
    table = mom_sweep(net)
    if args.out:
        files = emit_report(
            args.out,
            [table],
            run_info={"command": "mom", "netlist": net.name},
        )
        print(f"wrote {len(files)} file(s) under {args.out}")
    else:
        print(table.to_csv(), end="")
    print(_result("mom", True, rows=len(table.rows), netlist=net.name))
    return 0


def cmd_mrm(args) -> int:
    try:
        net = _load_net(args)
        faults = _parse_faults(args.fault)
    except (NetlistError, ValueError) as exc:
        print(f"error: {exc}")
        print(_result("mrm", False, reason="bad-config"))
        return 1

    remote = args.transport != "loopback"
    if remote and args.virtual_time:
        print("error: --virtual-time needs the loopback transport")
        print(_result("mrm", False, reason="bad-config"))
        return 2
    if remote and faults:
        print("error: --fault applies to the in-process board; configure the remote board instead")
        print(_result("mrm", False, reason="bad-config"))
        return 2

    mom_table = mom_sweep(net)

    clock = VirtualClock() if args.virtual_time else RealClock()
    if remote:
        transcript = Transcript()
        try:
            endpoint = connect_stream(
                args.transport, clock=clock, transcript=transcript, side="model"
            )
        except (ConnectionRefusedError, OSError, ValueError) as exc:
            print(f"connection error: {exc}")
            print(_result("mrm", False, reason="connect"))
            return 1
        model = ModelServer(net, clock, delay_ms=args.delay_ms)
        model.attach(endpoint)
        model.start()
        model.post_event(set_mode(Mode.MRM))
        session = MrmSession(
            model, None, clock, transcript, args.delay_ms, args.poll_hz, 0
        )
    else:
        session = open_loopback_session(
            net,
            clock,
            faults=faults,
            delay_ms=args.delay_ms,
            poll_hz=args.poll_hz,
            latency_ms=args.latency_ms,
        )

    mrm_table = mrm_sweep(session)
    session.close()

    diffs = [
        diff_kmaps(a, b)
        for a, b in zip(kmaps_for(mom_table), kmaps_for(mrm_table))
    ] if mrm_table.complete else []

    zero = bool(diffs) and all(d.is_zero for d in diffs)
    ok = zero and mrm_table.complete

    if args.out:
        emit_report(
            args.out,
            [mom_table, mrm_table],
            diffs=diffs or None,
            run_info={
                "command": "mrm",
                "netlist": net.name,
                "delay_ms": args.delay_ms,
                "poll_hz": args.poll_hz,
                "latency_ms": args.latency_ms,
                "clock": clock.mode,
                "transport": args.transport,
                "faults": [str(f) for f in faults],
            },
        )
        print(f"report written under {args.out}")

    if not mrm_table.complete:
        print(f"incomplete sweep: {len(mrm_table.failed_rows)} failed row(s)")
    for d in diffs:
        if not d.is_zero:
            print(render_diff(d), end="")
    print("verdict: ZERO-DISCREPANCY" if ok else "verdict: DISCREPANCY")
    print(
        _result(
            "mrm",
            ok,
            zero_discrepancy=str(zero).lower(),
            rows=len(mrm_table.rows),
            failed=len(mrm_table.failed_rows),
            netlist=net.name,
        )
    )
    return 0 if ok else 1


def cmd_board(args) -> int:
    try:
        net = _load_net(args)
        faults = _parse_faults(args.fault)
        listener = listen_stream(args.listen)
    except (NetlistError, ValueError, OSError) as exc:
        print(f"error: {exc}")
        print(_result("board", False, reason="bad-config"))
        return 1
    clock = RealClock()
    print(f"board listening on {listener.address} (netlist {net.name})")
    try:
        while True:
            try:
                endpoint = listener.accept(timeout=0.25, clock=clock, side="board")
            except socket.timeout:
                continue
            board = BoardServer(net, clock, faults=faults, on_log=print)
            board.serve(endpoint, poll_hz=args.poll_hz)
            print("session open")
            while board.running:
                clock.wait_until(clock.now() + 200)
            endpoint.close()
            print("session closed")
    except KeyboardInterrupt:
        print("\nshutting down")
    finally:
        listener.close()
    print(_result("board", True, netlist=net.name))
    return 0


def cmd_panel(args) -> int:
    if args.virtual_time:
        print("error: the interactive panel requires the real clock")
        print(_result("panel", False, reason="bad-config"))
        return 2
    try:
        net = _load_net(args)
        faults = _parse_faults(args.fault)
    except (NetlistError, ValueError) as exc:
        print(f"error: {exc}")
        print(_result("panel", False, reason="bad-config"))
        return 1

    clock = RealClock()
    model = ModelServer(net, clock, delay_ms=args.delay_ms)
    board = None
    endpoint = None
    if args.board == "loopback":
        from .transport import open_loopback

        model_ep, board_ep = open_loopback(clock, sides=("model", "board"))
        board = BoardServer(net, clock, faults=faults)
        board.serve(board_ep, poll_hz=args.poll_hz)
        model.attach(model_ep)
    elif args.board != "none":
        try:
            endpoint = connect_stream(args.board, clock=clock, side="model")
        except (ConnectionRefusedError, OSError, ValueError) as exc:
            print(f"connection error: {exc}")
            print(_result("panel", False, reason="connect"))
            return 1
        model.attach(endpoint)

    service = PanelService(
        model,
        clock,
        port=args.http_port,
        assets_dir=args.assets,
        sweep_out=args.out,
    )
    try:
        service.start()
    except OSError as exc:
        print(f"bind error: {exc}")
        print(_result("panel", False, reason="bind"))
        return 1
    model.start()
    print(f"panel ready: {service.url} (mode {model.mode.value})")
    try:
        while True:
            clock.wait_until(clock.now() + 200)
    except KeyboardInterrupt:
        print("\nshutting down")
    finally:
        service.stop()
        if board is not None:
            board.stop()
        if endpoint is not None:
            endpoint.close()
    print(_result("panel", True, netlist=net.name))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shia",
        description="Hardware-in-the-loop verification of a logic chassis, fully in software.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a netlist document")
    _add_netlist_flag(p)
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("mom", help="model-only truth-table sweep")
    _add_netlist_flag(p)
    p.add_argument("--out", metavar="DIR", help="write the report under DIR")
    p.set_defaults(fn=cmd_mom)

    p = sub.add_parser("mrm", help="verify the model against an emulated board")
    _add_netlist_flag(p)
    p.add_argument(
        "--transport",
        default="loopback",
        metavar="loopback|HOST:PORT",
        help="in-process loopback (default) or a remote board address",
    )
    p.add_argument("--delay-ms", type=int, default=500, help="reply delay (default 500)")
    p.add_argument("--poll-hz", type=int, default=10, help="board poll rate (default 10)")
    p.add_argument("--latency-ms", type=int, default=0, help="injected loopback latency")
    p.add_argument(
        "--virtual-time",
        action="store_true",
        help="run on the virtual clock (loopback only; fast and deterministic)",
    )
    p.add_argument(
        "--fault",
        metavar="KIND:PIN[,...]",
        help="inject board faults, e.g. stuck_low:3 or swap_wiring:1:2",
    )
    p.add_argument("--out", metavar="DIR", help="write the report under DIR")
    p.set_defaults(fn=cmd_mrm)

    p = sub.add_parser("board", help="serve the emulated board over TCP")
    _add_netlist_flag(p)
    p.add_argument("--listen", default="127.0.0.1:9000", metavar="HOST:PORT")
    p.add_argument("--poll-hz", type=int, default=10)
    p.add_argument("--fault", metavar="KIND:PIN[,...]")
    p.set_defaults(fn=cmd_board)

    p = sub.add_parser("panel", help="run the interactive operator panel")
    _add_netlist_flag(p)
    p.add_argument(
        "--board",
        default="loopback",
        metavar="loopback|none|HOST:PORT",
        help="board behind the panel (default: in-process loopback)",
    )
    p.add_argument("--http-port", type=int, default=DEFAULT_PORT)
    p.add_argument("--delay-ms", type=int, default=500)
    p.add_argument("--poll-hz", type=int, default=10)
    p.add_argument("--fault", metavar="KIND:PIN[,...]")
    p.add_argument("--assets", metavar="DIR", help="panel asset directory")
    p.add_argument("--out", metavar="DIR", help="where panel-run sweeps write reports")
    p.add_argument("--virtual-time", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(fn=cmd_panel)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
