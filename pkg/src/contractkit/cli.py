"""Command-line interface: ``contractkit <verb> [options]``.

Every verb prints a JSON report on stdout. Exit status is 0 on success,
2 on invalid input and 3 when a numeric routine did not converge.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import errors as E
from .applications import (
    GraphModel, fmmc_solve, info_contraction_sup, mixing_time_bound, potts_kernels,
    reconstruction_report, sw_hb_compare,
)
from .channels import adjoint, tensor, tensor_dist
from .contraction import (
    dobrushin, eta_bounds, eta_chi2, eta_numeric, graph_rw_bound,
)
from .divergences import JointLaw, phi_divergence
from .errors import ContractError
from .foundation import KL, bern, bsc, parse_phi, path_graph, uniform, validate_admissible
from .io import dumps_report, load_channel, load_dist, load_graph
from .sobolev import (
    ReversiblePair, factor_through, log_sobolev_constant, poincare_constant, sobolev_sdpi_bridge,
)

EXIT_OK, EXIT_INPUT, EXIT_NONCONV = 0, 2, 3


class NotConverged(Exception):
    def __init__(self, report):
        super().__init__("not converged")
        self.report = report


def _grid(text):
    if text is None:
        return None
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError as err:
        raise ContractError(E.PARSE, f"bad lambda grid {text!r}") from err
    if not vals or any(not 0.0 < v < 1.0 for v in vals):
        raise ContractError(E.DOMAIN, "lambda grid values must lie in (0,1)")
    return vals


def _vertices(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError as err:
        raise ContractError(E.PARSE, f"bad vertex list {text!r}") from err


def _opts(a):
    return {"starts": a.starts, "tol": a.tol, "seed": a.seed}


def _pair(a):
    return validate_admissible(load_dist(a.mu), load_channel(a.channel))


def _reversible(a):
    return ReversiblePair(load_dist(a.mu), load_channel(a.kernel))


def cmd_divergence(a):
    phi = parse_phi(a.phi)
    return {"phi": phi.name, "divergence": phi_divergence(phi, load_dist(a.nu), load_dist(a.mu))}


def cmd_eta(a):
    phi = parse_phi(a.phi)
    pair = _pair(a)
    if phi.name == "tv":
        return {"phi": "tv", "estimate": dobrushin(pair.k), "note": "Dobrushin coefficient"}
    rep = eta_numeric(phi, pair, with_opconv=not a.no_opconv, lambda_grid=_grid(a.lambda_grid), **_opts(a))
    out = rep.as_dict()
    if not rep.converged:
        raise NotConverged(out)
    return out


def cmd_bounds(a):
    rep = eta_bounds(parse_phi(a.phi), _pair(a), _grid(a.lambda_grid), **_opts(a))
    return rep.as_dict()


def cmd_adjoint(a):
    pair = _pair(a)
    return {"adjoint": adjoint(pair).rows, "output_law": pair.output_law.mass}


def cmd_tensor(a):
    mu1, k1 = load_dist(a.mu), load_channel(a.channel)
    mu2 = load_dist(a.mu2) if a.mu2 else mu1
    k2 = load_channel(a.channel2) if a.channel2 else k1
    mu, k = tensor_dist(mu1, mu2), tensor(k1, k2)
    pair = validate_admissible(mu, k)
    chi2, s = eta_chi2(pair)
    return {"mu": mu.mass, "channel": k.rows, "eta_chi2": chi2,
            "components_eta_chi2": [eta_chi2(validate_admissible(mu1, k1))[0],
                                    eta_chi2(validate_admissible(mu2, k2))[0]]}


def cmd_sobolev(a):
    rp = _reversible(a)
    pc = poincare_constant(rp)
    out = {"lambda_tilde": pc.lambda_tilde, "abs_gap": pc.abs_gap}
    conv = True
    for p in (0, 1, 2):
        r = log_sobolev_constant(rp, p, seed=a.seed)
        out[f"rho{p}"] = r.value
        conv &= r.converged
    if not conv:
        raise NotConverged(out)
    return out


def cmd_factor(a):
    rp = _reversible(a)
    fact = factor_through(rp, a.strategy)
    out = {"strategy": fact.strategy, "channel": fact.k.rows, "residual": fact.residual}
    if a.bridge:
        out["bridge"] = sobolev_sdpi_bridge(rp, fact, parse_phi(a.phi), seed=a.seed)
    return out


def cmd_mix_time(a):
    phi = parse_phi(a.phi)
    rp = _reversible(a)
    eta = a.eta
    if eta is None:
        pair = validate_admissible(rp.mu, rp.m)
        eta = eta_chi2(pair)[0] if phi.name == "chi2" else eta_numeric(phi, pair, **_opts(a)).estimate
    rep = mixing_time_bound(phi, rp, a.eps, eta)
    return {"phi": phi.name, "eta": eta, "t_bound": rep.t_bound, "d_star": rep.d_star,
            "trajectory": rep.trajectory, "dominated": rep.dominated, "confirmed": rep.confirmed}


def cmd_fmmc(a):
    g = load_graph(a.graph)
    mu = load_dist(a.mu) if a.mu else None
    res = fmmc_solve(g, mu, iters=a.iters, tol=a.tol)
    out = {"value": res.value, "kernel": res.kernel.rows, "iterations": res.iterations,
           "method": res.method, "certificate": {"eigenvalue": res.certificate[0], "vector": res.certificate[1]}}
    if not res.converged:
        raise NotConverged(out)
    return out


def _model(a):
    g = load_graph(a.graph)
    return GraphModel(g.n, g.edges, a.q, a.beta)


def cmd_potts(a):
    gm = _model(a)
    pk = potts_kernels(gm)
    out = {"gibbs": pk.gibbs.mass, "compare": sw_hb_compare(gm, parse_phi(a.phi), **_opts(a))}
    if pk.gibbs.size <= a.max_print:
        out["hb"] = pk.hb.rows
        out["sw"] = pk.sw.rows
    return out


def cmd_info_sup(a):
    pair = _pair(a)
    joint = JointLaw(pair.mu.mass[:, None] * pair.k.rows)
    return info_contraction_sup(parse_phi(a.phi), joint, samples=a.samples, seed=a.seed,
                                starts=a.starts, tol=a.tol)


def cmd_reconstruct(a):
    gm = _model(a)
    region = _vertices(a.region) if a.region else None
    return reconstruction_report(gm, _vertices(a.A), _vertices(a.B), parse_phi(a.phi), region=region,
                                 C=a.C, c=a.c)


def selftest_checks():
    """Closed-form checks; yields (name, ok, detail)."""
    for eps in (0.1, 0.2, 0.3):
        pair = validate_admissible(bern(0.5), bsc(eps))
        exact = (1 - 2 * eps) ** 2
        yield f"chi2 BSC({eps})", abs(eta_chi2(pair)[0] - exact) < 1e-10, eta_chi2(pair)[0]
        est = eta_numeric(KL, pair).estimate
        yield f"kl BSC({eps})", abs(est - exact) < 1e-5, est
        yield f"dobrushin BSC({eps})", abs(dobrushin(pair.k) - (1 - 2 * eps)) < 1e-15, dobrushin(pair.k)
        rp = ReversiblePair(bern(0.5), bsc(eps))
        gap = poincare_constant(rp).lambda_tilde
        yield f"spectral gap DSBS({eps})", abs(gap - 2 * eps) < 1e-10, gap
        fact = factor_through(rp)
        delta = 0.5 * (1 + math.sqrt(1 - 2 * eps))
        ok = fact.residual < 1e-12 and np.allclose(fact.k.rows, bsc(delta).rows, atol=1e-12)
        yield f"factor DSBS({eps})", ok, fact.residual
    for eps, want in ((0.4, 0.68), (0.5, 1.0)):
        b = graph_rw_bound(path_graph(3), eps).bound
        yield f"path-3 bound eps={eps}", abs(b - want) < 1e-12, b
    for n in (2, 4, 8):
        rp = ReversiblePair(uniform(n), load_channel(f"identity_{n}"))
        d = mixing_time_bound(KL, rp, 10.0, 0.5).d_star
        yield f"D* uniform {n}", abs(d - math.log(n)) < 1e-12, d


def cmd_selftest(a):
    results = [{"check": n, "ok": bool(ok), "value": float(v)} for n, ok, v in selftest_checks()]
    return {"passed": all(r["ok"] for r in results), "checks": results}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="contractkit", description="Contraction coefficients for discrete channels.")
    sub = p.add_subparsers(dest="verb", required=True)

    def add(name, fn, help_):
        s = sub.add_parser(name, help=help_)
        s.set_defaults(fn=fn)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--starts", type=int, default=16)
        s.add_argument("--tol", type=float, default=1e-9)
        return s

    s = add("divergence", cmd_divergence, "Phi-divergence between two laws")
    s.add_argument("--phi", default="kl")
    s.add_argument("--nu", required=True)
    s.add_argument("--mu", required=True)

    for name, fn, help_ in (("eta", cmd_eta, "estimate eta with the full bound ladder"),
                            ("bounds", cmd_bounds, "bound ladder only")):
        s = add(name, fn, help_)
        s.add_argument("--phi", default="kl")
        s.add_argument("--mu", required=True)
        s.add_argument("--channel", required=True)
        s.add_argument("--lambda-grid")
        if name == "eta":
            s.add_argument("--no-opconv", action="store_true", help="skip the Le Cam sweep")

    s = add("adjoint", cmd_adjoint, "backward channel")
    s.add_argument("--mu", required=True)
    s.add_argument("--channel", required=True)

    s = add("tensor", cmd_tensor, "product pair and its chi-square constant")
    s.add_argument("--mu", required=True)
    s.add_argument("--channel", required=True)
    s.add_argument("--mu2")
    s.add_argument("--channel2")

    s = add("sobolev", cmd_sobolev, "spectral gap and log-Sobolev constants")
    s.add_argument("--mu", required=True)
    s.add_argument("--kernel", required=True)

    s = add("factor", cmd_factor, "factor a reversible kernel as K* K")
    s.add_argument("--mu", required=True)
    s.add_argument("--kernel", required=True)
    s.add_argument("--strategy", choices=["dsbs_closed_form", "spectral_sqrt", "parametric_search"])
    s.add_argument("--bridge", action="store_true", help="also run the Sobolev bridge checks")
    s.add_argument("--phi", default="kl")

    s = add("mix-time", cmd_mix_time, "mixing-time bound from a contraction constant")
    s.add_argument("--phi", default="kl")
    s.add_argument("--mu", required=True)
    s.add_argument("--kernel", required=True)
    s.add_argument("--eps", type=float, required=True)
    s.add_argument("--eta", type=float)

    s = add("fmmc", cmd_fmmc, "fastest mixing chain on a graph")
    s.add_argument("--graph", required=True)
    s.add_argument("--mu")
    s.add_argument("--iters", type=int, default=500)

    for name, fn, help_ in (("potts", cmd_potts, "heat-bath vs Swendsen-Wang"),
                            ("reconstruct", cmd_reconstruct, "block information and correlation decay")):
        s = add(name, fn, help_)
        s.add_argument("--graph", required=True)
        s.add_argument("--q", type=int, default=2)
        s.add_argument("--beta", type=float, default=0.0)
        s.add_argument("--phi", default="chi2" if name == "potts" else "kl")
        if name == "potts":
            s.add_argument("--max-print", type=int, default=64)
        else:
            s.add_argument("--A", required=True)
            s.add_argument("--B", required=True)
            s.add_argument("--region")
            s.add_argument("--C", type=float)
            s.add_argument("--c", type=float)

    s = add("info-sup", cmd_info_sup, "information contraction over auxiliary variables")
    s.add_argument("--phi", default="kl")
    s.add_argument("--mu", required=True)
    s.add_argument("--channel", required=True)
    s.add_argument("--samples", type=int, default=200)

    add("selftest", cmd_selftest, "closed-form checks")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report = args.fn(args)
    except NotConverged as nc:
        print(dumps_report({"converged": False, **nc.report}))
        return EXIT_NONCONV
    except ContractError as err:
        print(dumps_report({"error": err.code, "message": err.message, "index": err.index}), file=sys.stderr)
        return EXIT_NONCONV if err.code == E.NON_CONVERGED else EXIT_INPUT
    print(dumps_report(report))
    if args.verb == "selftest" and not report["passed"]:
        return 1
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
