"""Prefactor constants, auxiliary chains, flows, and the test function.

Run:  python3 demos/constants_pipeline.py
"""

from spinscape import potential as pt
from spinscape.landscape import enumerate_space, typical_sets
from spinscape.lattice import LatticeSpec


def main() -> None:
    print("== the constants bundle on a non-enumerable instance ==")
    spec = LatticeSpec(3, 4, 8, 2, "periodic")
    bundle = pt.constants(spec)
    print(f"  kappa = {bundle.kappa:.6e}")
    for n in sorted(bundle.c):
        print(
            f"  n={n}: b = {bundle.b[n]:.6e}, e = {bundle.e[n]:.6e},"
            f" c = {bundle.c[n]:.6e}  [{bundle.provenance[f'e({n})']}]"
        )
    print("  non-reproducible claims carried in the report:")
    for claim in bundle.non_reproducible:
        print(f"    - {claim}")

    print("\n== auxiliary chain on the largest enumerable instance ==")
    space = enumerate_space(LatticeSpec(2, 2, 4, 2, "open"))
    ts = typical_sets(space, A=(1,), B=(2,))
    aux = pt.build_aux_chain(ts)
    print(f"  {aux.n} vertices, exact flux balance: {aux.flux_balance_exact()}")
    for w in ts.warnings:
        print(f"  warning: {w}")
    s_v, t_v = pt.aux_ground_and_window_vertices(ts, aux)
    try:
        pt.aux_capacity(aux, s_v, t_v)
    except ValueError as exc:
        print(f"  aux capacity refused: {exc}")

    print("\n== flow battery on a synthetic nondegenerate chain ==")
    rep = pt.flow_check_battery(5, 6, 7)
    for key in (
        "n_vertices",
        "flux_balance_exact",
        "unit_flow",
        "norm_bound_holds",
        "thomson_bound_holds",
    ):
        if key in rep:
            print(f"  {key}: {rep[key]}")
    print(f"  ||psi||^2 = {rep['flow_norm_sq']:.6e}"
          f" (closed form {rep['flow_norm_closed_form']:.6e})")

    print("\n== explicit test function and its defect diagnostics ==")
    beta = 3.0
    ts_BA = typical_sets(space, A=(2,), B=(1,), gamma=ts.gamma)
    bundle224 = pt.constants(space.spec)
    h, info = pt.test_function(space, ts, ts_BA, bundle224, beta=beta)
    g = space.ground_states()
    diag = pt.h1_diagnostics(space, h, beta, [g[1]], [g[2]])
    print(f"  D(h~) = {diag['dirichlet_h_tilde']:.6e} >= cap = {diag['capacity']:.6e}:"
          f" {diag['dirichlet_principle_holds']}")
    print(f"  defect identity relative error: {diag['defect_rel_err']:.2e}")


if __name__ == "__main__":
    main()
