"""Independent reference implementations for pinning expected values.

Nothing in this module imports the package under test. The high-precision
formula oracles run on mpmath at 50 digits; the brute-force classifier is
deliberately unoptimized pure Python working on plain tuples, implementing
the link-condition definitions directly from their mathematical statement.
"""
from __future__ import annotations

import math

from mpmath import mp, mpf, log10 as mplog10, sqrt as mpsqrt

mp.dps = 50

C_LIGHT = mpf(299792458)


# ---------------------------------------------------------------------------
# high-precision formula oracles
# ---------------------------------------------------------------------------


def pl_los_hp(d3d, fc) -> mpf:
    return mpf("38.77") + mpf("16.7") * mplog10(mpf(d3d)) + mpf("18.2") * mplog10(mpf(fc))


def pl_nlosb_hp(d3d, fc) -> mpf:
    return mpf("36.85") + mpf(30) * mplog10(mpf(d3d)) + mpf("18.9") * mplog10(mpf(fc))


def knife_edge_branch_hp(nu) -> mpf:
    """The above-threshold branch expression, evaluated unconditionally."""
    nu = mpf(nu)
    return mpf("6.9") + mpf(20) * mplog10(mpsqrt((nu - mpf("0.1")) ** 2 + 1) + nu - mpf("0.1"))


def knife_edge_hp(nu) -> mpf:
    return mpf(0) if mpf(nu) <= mpf("0.7") else knife_edge_branch_hp(nu)


def fresnel_radius_hp(d1, d2, fc) -> mpf:
    lam = C_LIGHT / (mpf(fc) * mpf(10) ** 9)
    return mpsqrt(lam * mpf(d1) * mpf(d2) / (mpf(d1) + mpf(d2)))


def nu_hp(h_obstacle, h_link, d1, d2, fc) -> mpf:
    return mpsqrt(2) * (mpf(h_obstacle) - mpf(h_link)) / fresnel_radius_hp(d1, d2, fc)


def nlosv_extra_hp(h_obstacle, h_link, d1, d2, fc) -> mpf:
    return knife_edge_hp(nu_hp(h_obstacle, h_link, d1, d2, fc))


def los_delivery_boundary_hp(tx, sensitivity, fc) -> mpf:
    """Distance where tx - PL_LOS(d) = sensitivity, by bisection."""
    target = mpf(tx) - mpf(sensitivity)
    lo, hi = mpf(1), mpf(10) ** 9
    for _ in range(400):
        mid = (lo + hi) / 2
        if pl_los_hp(mid, fc) < target:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


# ---------------------------------------------------------------------------
# brute-force link classifier
# ---------------------------------------------------------------------------

_DEGENERATE = 1e-12


def _orient(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


def _on_seg(ax, ay, bx, by, px, py):
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def segments_intersect(p1, p2, q1, q2) -> bool:
    """Closed segments; touching or collinear overlap counts."""
    d1 = _orient(q1[0], q1[1], q2[0], q2[1], p1[0], p1[1])
    d2 = _orient(q1[0], q1[1], q2[0], q2[1], p2[0], p2[1])
    d3 = _orient(p1[0], p1[1], p2[0], p2[1], q1[0], q1[1])
    d4 = _orient(p1[0], p1[1], p2[0], p2[1], q2[0], q2[1])
    if ((d1 > 0) != (d2 > 0)) and d1 != 0 and d2 != 0 and ((d3 > 0) != (d4 > 0)) and d3 != 0 and d4 != 0:
        return True
    if d1 == 0 and _on_seg(q1[0], q1[1], q2[0], q2[1], p1[0], p1[1]):
        return True
    if d2 == 0 and _on_seg(q1[0], q1[1], q2[0], q2[1], p2[0], p2[1]):
        return True
    if d3 == 0 and _on_seg(p1[0], p1[1], p2[0], p2[1], q1[0], q1[1]):
        return True
    if d4 == 0 and _on_seg(p1[0], p1[1], p2[0], p2[1], q2[0], q2[1]):
        return True
    return False


def point_to_line_distance(a, b, p) -> float:
    dx, dy = b[0] - a[0], b[1] - a[1]
    return abs(dx * (p[1] - a[1]) - dy * (p[0] - a[0])) / math.sqrt(dx * dx + dy * dy)


def brute_force_classify(ego, vehicles, buildings, r_b, r_v, threshold):
    """Reference classifier on plain tuples.

    ego: (x, y); vehicles: [(id, x, y), ...]; buildings:
    [(id, [(x, y), ...]), ...]. Returns {vehicle_id: (condition_string,
    blocker_present)} for every vehicle strictly within r_v. Buildings
    count as in range when their nearest vertex is strictly within r_b.
    """
    ex, ey = ego

    in_b = []
    for bid, verts in sorted(buildings):
        if math.isinf(r_b):
            in_b.append((bid, verts))
            continue
        best = min((vx - ex) ** 2 + (vy - ey) ** 2 for vx, vy in verts)
        if best < r_b * r_b:
            in_b.append((bid, verts))

    in_v = []
    for vid, x, y in sorted(vehicles):
        if math.sqrt((x - ex) ** 2 + (y - ey) ** 2) < r_v:
            in_v.append((vid, x, y))

    out = {}
    for vid, tx, ty in in_v:
        d = math.sqrt((tx - ex) ** 2 + (ty - ey) ** 2)
        if d < _DEGENERATE:
            out[vid] = ("LOS", False)
            continue

        blocked_by = None
        for bid, verts in in_b:
            n = len(verts)
            for k in range(n):
                if segments_intersect((ex, ey), (tx, ty), verts[k], verts[(k + 1) % n]):
                    blocked_by = bid
                    break
            if blocked_by is not None:
                break
        if blocked_by is not None:
            out[vid] = ("NLOSb", True)
            continue

        dx, dy = tx - ex, ty - ey
        l2 = dx * dx + dy * dy
        between = None
        for sid, sx, sy in in_v:
            if sid == vid:
                continue
            t = ((sx - ex) * dx + (sy - ey) * dy) / l2
            if not (0.0 < t < 1.0):
                continue
            d_orth = abs(dx * (sy - ey) - dy * (sx - ex)) / math.sqrt(l2)
            if d_orth < threshold:
                between = sid
                break
        if between is not None:
            out[vid] = ("NLOSv", True)
        else:
            out[vid] = ("LOS", False)
    return out
