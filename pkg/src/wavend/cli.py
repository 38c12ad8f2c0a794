"""Command-line front end: ``wavend run`` and ``wavend stats``."""

from __future__ import annotations

import argparse
import os
import shutil
import sys
import time


from . import config as cfgmod
from .compress import CompressionParams, assemble_compressed
from .factor import FactorBundle, numeric_cholesky, symbolic_cholesky
from .kernels import make_kernel
from .meshgeom import build_dyadic_hierarchy
from .ordering import levelwise_ordering, nested_dissection, sparsity_graph
from .sparse import (read_matrix_market, read_permutation, write_matrix_market,
                     write_permutation)
from .wavelet import CapacityError, build_basis, inverse_transform, mass_matrix

STATS_HEADER = "N,nnz_A,anz_A,nnz_L,anz_L,t_nd,t_chol"


class _Outputs:
    """Tracks written files so a failed run leaves nothing behind."""

    def __init__(self, directory):
        self.dir = directory
        self.created_dir = not os.path.isdir(directory)
        os.makedirs(directory, exist_ok=True)
        self.files = []

    def path(self, name):
        p = os.path.join(self.dir, name)
        self.files.append(p)
        return p

    def rollback(self):
        for p in self.files:
            if os.path.exists(p):
                os.remove(p)
        if self.created_dir and os.path.isdir(self.dir) and not os.listdir(self.dir):
            shutil.rmtree(self.dir)


def _fmt(x) -> str:
    return f"{x:.17g}"


def _order(cfg, A, basis):
    t0 = time.perf_counter()
    if cfg.get("ordering.method") == "levelwise":
        perm = levelwise_ordering(basis.size)
    else:
        graph = sparsity_graph(A, coords=basis.support_centers(), levels=basis.level)
        perm, _ = nested_dissection(graph, cfg.integer("ordering.leaf_size"))
    return perm, time.perf_counter() - t0


def _factor(A, perm):
    t0 = time.perf_counter()
    bundle = numeric_cholesky(A, symbolic_cholesky(A, perm))
    return bundle, time.perf_counter() - t0


def _write_stats(out, cfg, A, bundle: FactorBundle, t_nd, t_chol):
    N = A.shape[0]
    timed = cfg.flag("output.timings")
    row = [str(N), str(A.nnz), _fmt(A.nnz / N), str(bundle.nnz_L), _fmt(bundle.anz_L),
           _fmt(t_nd) if timed else "", _fmt(t_chol) if timed else ""]
    with open(out.path("stats.csv"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(STATS_HEADER + "\n" + ",".join(row) + "\n")


def _print_table(N, A, bundle, t_wem, t_nd, t_chol):
    print(f"{'N':>8} {'anz(A)':>9} {'anz(L)':>9} {'t_WEM':>9} {'t_ND':>9} {'t_Chol':>9}")
    print(f"{N:>8d} {A.nnz / N:>9.1f} {bundle.anz_L:>9.1f} {t_wem:>9.2f} {t_nd:>9.2f} {t_chol:>9.2f}")


def _leaf_csv(path, basis, columns, labels, label_name):
    """Rows ``label, x[, y], value`` for every leaf and every column."""
    centers = basis.tree.leaf_centers()
    n = centers.shape[1]
    head = [label_name] + ["x", "y"][:n] + ["value"]
    lines = [",".join(head)]
    for lab, col in zip(labels, columns):
        for c, v in zip(centers, col):
            lines.append(",".join([str(lab)] + [_fmt(t) for t in c] + [_fmt(v)]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _setup(cfg):
    dom = cfg.domain()
    try:
        tree = build_dyadic_hierarchy(dom, cfg.integer("level"))
        basis = build_basis(tree, cfg.integer("basis.vanishing_moments"))
    except (CapacityError, ValueError) as err:
        raise cfgmod.ConfigError("level", str(err)) from None
    kernel = make_kernel(cfg.get("kernel.name"), dom.dim, s=cfg.number("kernel.s"),
                         length=cfg.number("kernel.length"), order2q=cfg.order2q())
    params = CompressionParams.for_basis(basis, kernel, a=cfg.number("compression.a"),
                                         delta=cfg.delta(kernel.q))
    return basis, kernel, params


def run_heat(cfg, out):
    from .apps.heat import ThetaSchemeConfig, heat_source, load_vector, run_theta_scheme

    t0 = time.perf_counter()
    basis, kernel, params = _setup(cfg)
    S, _ = assemble_compressed(kernel, basis, params)
    G = mass_matrix(basis)
    t_wem = time.perf_counter() - t0
    theta = cfg.number("heat.theta")
    tcfg = ThetaSchemeConfig(theta, cfg.number("heat.T"), cfg.integer("heat.steps"),
                             source=lambda t: load_vector(basis, heat_source, t))
    A = (G + theta * tcfg.dt * S).tocsc()
    A.eliminate_zeros()
    perm, t_nd = _order(cfg, A, basis)
    bundle, t_chol = _factor(A, perm)
    traj, _ = run_theta_scheme(tcfg, G, S, factor=bundle)
    write_matrix_market(out.path("stiffness.mtx"), S, symmetric=True)
    write_matrix_market(out.path("system.mtx"), A, symmetric=True)
    write_matrix_market(out.path("L.mtx"), bundle.L)
    write_permutation(out.path("perm.txt"), perm.order)
    _write_stats(out, cfg, A, bundle, t_nd, t_chol)
    every = cfg.integer("heat.snapshot_every")
    steps = list(range(0, tcfg.steps + 1, every))
    if steps[-1] != tcfg.steps:
        steps.append(tcfg.steps)
    vals = inverse_transform(basis, traj[steps].T).T
    _leaf_csv(out.path("trajectory.csv"), basis, vals, steps, "step")
    _print_table(basis.size, A, bundle, t_wem, t_nd, t_chol)


def run_sample(cfg, out):
    from .apps.field import build_field_model, sample_field

    t0 = time.perf_counter()
    basis, kernel, params = _setup(cfg)
    C, _ = assemble_compressed(kernel, basis, params)
    t_wem = time.perf_counter() - t0
    perm, t_nd = _order(cfg, C, basis)
    bundle, t_chol = _factor(C, perm)
    model = build_field_model(basis, kernel, params, seed=cfg.integer("seed"),
                              leaf_size=cfg.integer("ordering.leaf_size"))
    count = cfg.integer("sample.count")
    fields = sample_field(model, count, leaf_values=True)
    write_matrix_market(out.path("covariance.mtx"), C, symmetric=True)
    write_matrix_market(out.path("L.mtx"), bundle.L)
    write_permutation(out.path("perm.txt"), perm.order)
    _write_stats(out, cfg, C, bundle, t_nd, t_chol)
    _leaf_csv(out.path("field.csv"), basis, fields.T, range(count), "sample")
    _print_table(basis.size, C, bundle, t_wem, t_nd, t_chol)


def run_factor(cfg, out):
    t0 = time.perf_counter()
    basis, kernel, params = _setup(cfg)
    K, _ = assemble_compressed(kernel, basis, params)
    # the fractional stiffness annihilates constants; shift by the mass matrix
    A = (K + mass_matrix(basis)).tocsc() if kernel.difference_form else K
    A.eliminate_zeros()
    t_wem = time.perf_counter() - t0
    perm, t_nd = _order(cfg, A, basis)
    bundle, t_chol = _factor(A, perm)
    write_matrix_market(out.path("system.mtx"), A, symmetric=True)
    write_matrix_market(out.path("L.mtx"), bundle.L)
    write_permutation(out.path("perm.txt"), perm.order)
    _write_stats(out, cfg, A, bundle, t_nd, t_chol)
    _print_table(basis.size, A, bundle, t_wem, t_nd, t_chol)


DRIVERS = {"heat": run_heat, "sample": run_sample, "factor": run_factor}


def cmd_run(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            raw = cfgmod.parse_text(fh.read())
        cfg = cfgmod.load(raw, seed_override=args.seed)
    except OSError as err:
        print(f"error: cannot read config: {err}", file=sys.stderr)
        return 2
    except cfgmod.ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    if args.print_config:
        sys.stdout.write(cfg.text())
        return 0
    _cap_threads(args.threads or cfg.integer("threads"))
    out = _Outputs(cfg.get("output.dir"))
    try:
        DRIVERS[cfg.driver](cfg, out)
    except cfgmod.ConfigError as err:
        out.rollback()
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except Exception as err:
        out.rollback()
        print(f"error: {type(err).__name__}: {err}", file=sys.stderr)
        return 1
    return 0


def _cap_threads(k):
    import warnings

    import numba

    with warnings.catch_warnings():
        # numba probes optional threading layers here and warns about old TBB builds
        warnings.simplefilter("ignore")
        numba.set_num_threads(max(1, min(int(k), numba.config.NUMBA_NUM_THREADS)))


def cmd_stats(args) -> int:
    try:
        A = read_matrix_market(args.matrix)
        N = A.shape[0]
        print(f"N = {N}")
        print(f"nnz = {A.nnz}")
        print(f"anz = {A.nnz / N!r}")
        if args.perm:
            from .ordering import Permutation

            perm = Permutation(read_permutation(args.perm))
            if perm.N != N:
                raise ValueError(f"permutation has length {perm.N}, matrix has N = {N}")
            sym = symbolic_cholesky(A, perm)
            print(f"nnz_L = {sym.nnz}")
            print(f"anz_L = {sym.anz!r}")
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wavend", description="Wavelet-compressed sparse direct solver.")
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a driver from a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--print-config", action="store_true", help="echo the effective config and exit")
    r.add_argument("--threads", type=int, default=None)
    r.add_argument("--seed", type=int, default=None, help="overrides the config seed")
    r.set_defaults(func=cmd_run)
    s = sub.add_parser("stats", help="nnz/anz of a Matrix Market file")
    s.add_argument("matrix")
    s.add_argument("--perm", default=None, help="permutation file; adds predicted factor fill")
    s.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
