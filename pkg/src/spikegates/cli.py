"""Command-line entry point.

Exit status is 0 when the command succeeded and, for ``validate``, every
check passed; 1 when a validation failed; 2 on bad input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .calibration import SearchConfig, calibrate_all, published_weight_set
from .circuit import PREBUILT, prebuilt
from .config import Config, load_config, load_weights, save_weights
from .energy import energy_summary
from .errors import SpikeGatesError
from .export import export_traces, render_plots
from .netlist import count_buffers, elaborate, insert_buffers, layer_depths, parse_netlist
from .simulate import run_sim
from .stimulus import decode, parse_program
from .validate import default_program, validate


def _setup(args) -> Config:
    cfg = load_config(args.config) if getattr(args, "config", None) else Config()
    if getattr(args, "current", None) is not None:
        cfg = Config(cfg.neuron, cfg.energy, cfg.weights, cfg.decode, args.current, cfg.dt, cfg.extra)
    return cfg


def _weights(args, cfg: Config):
    if getattr(args, "weights", None):
        return load_weights(args.weights)
    if cfg.weights is not None:
        return cfg.weights
    return published_weight_set(cfg.current_pa)


def _graph(target: str, weights, cfg: Config):
    path = Path(target)
    if path.suffix == ".nnl" or path.is_file():
        ast = parse_netlist(path.read_text())
        return insert_buffers(elaborate(ast, weights, cfg.neuron, cfg.energy), weights)
    return prebuilt(target, weights, cfg.neuron, cfg.energy)


def _run(args, energy_mode: str):
    cfg = _setup(args)
    weights = _weights(args, cfg)
    graph = _graph(args.target, weights, cfg)
    if args.stimulus:
        program = parse_program(Path(args.stimulus).read_text())
        if args.current is not None:
            program = program.with_current(args.current)
    else:
        program = default_program(args.target, cfg.current_pa)
    dt = args.dt if args.dt is not None else cfg.dt
    result = run_sim(graph, program, dt, energy_mode=energy_mode)
    print(f"{graph.name}: {len(graph.neurons)} neurons, {len(graph.synapses)} synapses, "
          f"{program.total_ms:g} ms at dt={dt:g} ms, I={program.current_pa:g} pA")
    windows = result.windows
    for p in graph.probes:
        bits = decode(result.spike_times[p.neuron_id], windows, cfg.decode)
        print(f"  {p.signal_name}: {''.join(map(str, bits))}  "
              f"({len(result.spike_times[p.neuron_id])} spikes)")
    if args.out:
        out = Path(args.out)
        export_traces(result, out / "traces.csv")
        render_plots(result, [p.signal_name for p in graph.probes], out)
        print(f"  wrote {out}/traces.csv and {len(graph.probes)} SVG file(s)")
    return graph, result


def cmd_simulate(args) -> int:
    _run(args, "off" if args.no_energy else "observe")
    return 0


def cmd_energy(args) -> int:
    graph, result = _run(args, "gate" if args.gating == "on" else "observe")
    for j, label in enumerate(result.labels):
        s = energy_summary(result.eps[:, j], float(result.eps_0[j]), result.spiked[:, j])
        blocked = int(result.suppressed[:, j].sum()) if result.suppressed is not None else 0
        print(f"  {label:<28} eps_norm min={s.min:.4f} max={s.max:.4f} mean={s.mean:.4f} "
              f"spikes={len(result.spike_times[j])} suppressed={blocked}")
    return 0


def cmd_compile(args) -> int:
    cfg = _setup(args)
    weights = _weights(args, cfg)
    ast = parse_netlist(Path(args.netlist).read_text())
    raw = elaborate(ast, weights, cfg.neuron, cfg.energy)
    graph = insert_buffers(raw, weights)
    if args.emit_graph:
        text = graph.to_text()
        if args.emit_graph == "-":
            sys.stdout.write(text)
        else:
            Path(args.emit_graph).write_text(text)
    if args.report or not args.emit_graph:
        depths = layer_depths(graph)
        print(f"circuit {graph.name}")
        print(f"  neurons {len(graph.neurons)}  synapses {len(graph.synapses)}  "
              f"feedback {sum(s.feedback for s in graph.synapses)}")
        print(f"  buffers inserted {count_buffers(graph)}")
        for p in graph.probes:
            print(f"  output {p.signal_name} depth {depths[p.neuron_id]}")
    return 0


def cmd_calibrate(args) -> int:
    scfg = SearchConfig(resolution=args.resolution)
    cfg = _setup(args)
    res = calibrate_all(cfg.current_pa, scfg, cfg.neuron)
    print(f"I={cfg.current_pa:g} pA  ISI={res.isi_ms:.2f} ms")
    print(f"  w_x={res.w_x:g}  w_y={res.w_y:g}  w_z={res.w_z:g}  "
          f"(both-high AND threshold {res.w_z_min:g})")
    for k, d in res.deltas().items():
        print(f"  {k} vs published: {d:+.1%}")
    if not res.monotone:
        print("  warning: a search saw a non-monotone response and fell back to a linear scan")
    if args.out:
        save_weights(args.out, res.weight_set(), {
            "current_pa": f"{cfg.current_pa:g}", "isi_ms": f"{res.isi_ms!r}",
            "resolution": f"{args.resolution:g}"})
        print(f"  wrote {args.out}")
    return 0


def cmd_validate(args) -> int:
    cfg = _setup(args)
    weights = _weights(args, cfg)
    dt = args.dt if args.dt is not None else cfg.dt
    rep = validate(args.target, weights, cfg.current_pa, dt, args.energy_mode,
                   decode_cfg=cfg.decode, neuron_params=cfg.neuron, energy_params=cfg.energy)
    sys.stdout.write(rep.to_text())
    return 0 if rep.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spikegates", description="Spiking-neuron logic circuits.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, current_default=None):
        sp.add_argument("--config", help="key-value config file")
        sp.add_argument("--current", type=float, default=current_default,
                        help="stimulating current in pA")

    targets = ", ".join(PREBUILT)
    for name, helptext in (("simulate", "run a circuit and export traces"),
                           ("energy", "run with the energy observer and summarise it")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("target", help=f"netlist file (.nnl) or prebuilt circuit ({targets})")
        sp.add_argument("--stimulus", help="stimulus program file; default: the validation schedule")
        sp.add_argument("--weights", help="weights file")
        sp.add_argument("--dt", type=float, default=None)
        sp.add_argument("--out", help="directory for traces.csv and SVG plots")
        common(sp)
        if name == "simulate":
            sp.add_argument("--no-energy", action="store_true", help="skip the energy observer")
            sp.set_defaults(func=cmd_simulate)
        else:
            sp.add_argument("--gating", choices=("on", "off"), default="off")
            sp.set_defaults(func=cmd_energy)

    sp = sub.add_parser("compile", help="elaborate a netlist and insert buffers")
    sp.add_argument("netlist")
    sp.add_argument("--weights")
    sp.add_argument("--emit-graph", nargs="?", const="-", default=None,
                    help="write the graph dump to a file (or stdout)")
    sp.add_argument("--report", action="store_true")
    common(sp)
    sp.set_defaults(func=cmd_compile)

    sp = sub.add_parser("calibrate", help="search w_x, w_y, w_z for a current")
    sp.add_argument("--resolution", type=float, default=0.001)
    sp.add_argument("--out", help="weights file to write")
    common(sp, 4.0)
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("validate", help="truth-table or sequential check")
    sp.add_argument("target", help="and, and_not, not, nand, latch, gated-latch or dff")
    sp.add_argument("--weights")
    sp.add_argument("--dt", type=float, default=None)
    sp.add_argument("--energy-mode", choices=("off", "observe", "gate"), default="observe")
    common(sp)
    sp.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (SpikeGatesError, KeyError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
