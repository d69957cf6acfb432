"""Benchmark of the compiled propagation kernel against the numpy fallback.

Runs representative workloads of each pipeline stage on both backends and
prints a timing table.  Invoke from the repository root:

    python benchmarks/bench_kernel.py [--quick]
"""

import argparse
import time

import numpy as np

from isdsim import CompositeSystem, IonModel, LindbladParams, TwoColorGate
from isdsim._kernel import _python
from isdsim.levels import load_level_scheme

try:
    from isdsim._kernel import _core
except ImportError:
    _core = None


def _cases(scheme, gate, quick):
    qubit = IonModel.qubit3(scheme)
    ion6 = IonModel.six_level(scheme, detuning=300e6, initial="zero")
    shifts = np.array([[0.0, 1e6], [1e6, 0.0]])
    yield (
        "ideal NOT (psi, dim 3)",
        CompositeSystem(qubit, gate=gate, scheme=scheme),
        None,
        1e-10,
    )
    yield (
        "inside-map entry (psi, dim 18)",
        CompositeSystem(qubit, [ion6], shifts_hz=shifts, gate=gate, scheme=scheme),
        None,
        1e-8 if quick else 1e-10,
    )
    yield (
        "baseline (rho, dim 6, Lindblad)",
        CompositeSystem(
            IonModel.six_level(scheme, initial="plus_i", crosstalk=True),
            gate=gate,
            scheme=scheme,
        ),
        LindbladParams(),
        1e-8,
    )


def run(backend, system, lindblad, tol):
    from isdsim._kernel.common import EnvelopeSpec

    t_g = system.gate.envelope.t_g
    total_steps = 0
    if lindblad is None:
        state = system.initial_branches()[0][1]
        for seg in range(2):
            terms = system.drive_terms(seg)
            env = system.envelope_spec(0)
            env = EnvelopeSpec(env.c1, env.c2, env.sigma, env.t_g, seg * t_g)
            state, stats = backend.propagate_psi(
                state, terms, env, seg * t_g, (seg + 1) * t_g, tol, tol
            )
            total_steps += stats[0] + stats[1]
    else:
        state = system.initial_rho()
        diss = system.dissipator(lindblad)
        for seg in range(2):
            terms = system.drive_terms(seg)
            env = system.envelope_spec(0)
            env = EnvelopeSpec(env.c1, env.c2, env.sigma, env.t_g, seg * t_g)
            state, stats = backend.propagate_rho(
                state, terms, env, diss, seg * t_g, (seg + 1) * t_g, tol, tol
            )
            total_steps += stats[0] + stats[1]
    return total_steps


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="looser tolerances")
    args = ap.parse_args()

    scheme = load_level_scheme()
    gate = TwoColorGate.not_gate()
    backends = [("python", _python)]
    if _core is not None:
        backends.append(("cython", _core))
    else:
        print("compiled kernel not built; showing fallback only")

    print(f"{'case':36s} {'backend':8s} {'steps':>9s} {'time':>9s} {'steps/s':>10s}")
    for name, system, lindblad, tol in _cases(scheme, gate, args.quick):
        base_time = None
        for bname, backend in backends:
            t0 = time.perf_counter()
            steps = run(backend, system, lindblad, tol)
            dt = time.perf_counter() - t0
            speed = "" if base_time is None else f"  ({base_time / dt:.0f}x faster)"
            if bname == "python":
                base_time = dt
            print(
                f"{name:36s} {bname:8s} {steps:9d} {dt:8.2f}s {steps / dt:10.0f}{speed}"
            )


if __name__ == "__main__":
    main()
