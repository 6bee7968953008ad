"""Build the Newtonian connection of a potential and show its coefficients.

    python scripts/newtonian_demo.py "x^2 + y*z" --boost 0.5
"""

import argparse

import numpy as np

from galconn.checks import sample_points
from galconn.connection import ConnectionData, build_connection, extract_data
from galconn.expr import Evaluator, parse_expression, to_infix
from galconn.galilei import flat_structure, rest_observer
from galconn.milne import boost, verify_milne_invariance
from galconn.tensor import TensorField, einsum, partial_derivative

NAMES = ["t", "x", "y", "z"]


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("phi", nargs="?", default="x^2 + y*z", help="potential in t, x, y, z")
    ap.add_argument("--boost", type=float, default=0.5, help="constant boost velocity along x")
    args = ap.parse_args()

    g, v = flat_structure(4), rest_observer(4)
    phi = parse_expression(args.phi, 4, NAMES)
    dphi = partial_derivative(TensorField.scalar(4, phi))
    ta = einsum("m,n->mn", g.tau, dphi)
    z = ConnectionData.zero(4)
    data = ConnectionData(z.spatial_torsion, z.qhat, z.spatial_q, ta - ta.permute((1, 0)))
    c = build_connection(g, v, data)

    print(f"phi = {to_infix(phi, NAMES)}")
    pt = np.array([0.0, 0.3, -0.2, 0.5])
    vals, _ = Evaluator(pt[None, :]).array(c.gamma)
    for idx in np.argwhere(np.abs(vals[0]) > 0):
        r, m, n = idx
        print(f"Gamma^{NAMES[r]}_{NAMES[m]}{NAMES[n]} = {to_infix(c.gamma[r, m, n], NAMES)}"
              f"    (= {vals[0][r, m, n]:+.6f} at {pt.tolist()})")

    pts = sample_points(4, 50, (-1.0, 1.0), 42)
    w = TensorField.from_function(4, "U", lambda m: args.boost if m == 1 else 0.0)
    v2 = boost(v, w, g, pts)
    om2 = extract_data(c, g, v2).omega
    print(f"\nboost by {args.boost} d_x:")
    print(f"  Omega'_tx = {to_infix(om2[0, 1], NAMES)}")
    print("  " + verify_milne_invariance(g, v, v2, data, pts).line())


if __name__ == "__main__":
    main()
