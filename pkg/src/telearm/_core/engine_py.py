"""Pure-Python simulation kernel, the fallback twin of the compiled engine.

This module mirrors _engine.pyx expression for expression: any edit here
must be applied there too.  Plain arithmetic on C doubles and libm calls
behave identically in both, and the compiled build disables FMA
contraction, so the two backends produce bit-identical trajectories.
"""

from __future__ import annotations

from math import acos, atan2, cos, pi, sin, sqrt

BACKEND_NAME = "python"

_TWO_PI = 2.0 * pi


def run_piece(
    state,
    params,
    mode,
    f1, f2, f3, f4,
    g1, g2, g3, g4,
    move_start, move_ticks,
    start_tick, end_tick,
    has_target, tx, ty, tz, radius, check_from,
    log_every, out_log, row0,
):
    """Advance ticks start_tick+1 .. end_tick along one pilot motion piece.

    The pilot holds (f1..f4) before ``move_start``, blends to (g1..g4) over
    ``move_ticks``, and holds after.  Hits against the target ball are
    checked from ``check_from`` onward; rows are appended to ``out_log``
    starting at ``row0`` for ticks divisible by ``log_every``.

    Returns (last_tick, hit_tick, rows_written); hit_tick is -1 for no hit.
    """
    s = state.tolist()
    p = params.tolist()

    l1h, l2h, l3h = p[0], p[1], p[2]
    l1r, l2r, l3r = p[3], p[4], p[5]
    scale = p[6]
    rlo1, rlo2, rlo3, rlo4 = p[7], p[8], p[9], p[10]
    rhi1, rhi2, rhi3, rhi4 = p[11], p[12], p[13], p[14]
    alpha, beta, dt = p[15], p[16], p[17]
    kp1, kp2, kp3, kp4 = p[18], p[19], p[20], p[21]
    kd1, kd2, kd3, kd4 = p[22], p[23], p[24], p[25]
    j1, j2, j3, j4 = p[26], p[27], p[28], p[29]
    b1, b2, b3, b4 = p[30], p[31], p[32], p[33]
    tm1, tm2, tm3, tm4 = p[34], p[35], p[36], p[37]
    alo1, alo2, alo3, alo4 = p[38], p[39], p[40], p[41]
    ahi1, ahi2, ahi3, ahi4 = p[42], p[43], p[44], p[45]
    margin = p[46]

    phi1, phi2, phi3, phi4 = s[0], s[1], s[2], s[3]
    v1, v2, v3, v4 = s[4], s[5], s[6], s[7]
    pu1, pu2, pu3, pu4 = s[8], s[9], s[10], s[11]
    py1, py2, py3, py4 = s[12], s[13], s[14], s[15]

    move_end = move_start + move_ticks
    r2lim = radius * radius
    hit_tick = -1
    rows = 0

    t = start_tick
    while t < end_tick:
        t += 1

        # pilot pose on this piece
        if t < move_start:
            h1, h2, h3, h4 = f1, f2, f3, f4
        elif t >= move_end:
            h1, h2, h3, h4 = g1, g2, g3, g4
        else:
            sb = (t - move_start) / move_ticks
            sb2 = sb * sb
            sb3 = sb2 * sb
            blend = sb3 * (10.0 - 15.0 * sb + 6.0 * sb2)
            h1 = f1 + (g1 - f1) * blend
            h2 = f2 + (g2 - f2) * blend
            h3 = f3 + (g3 - f3) * blend
            h4 = f4 + (g4 - f4) * blend

        # retargeting
        if mode == 0:
            m3 = h3
            m4 = h4
        else:
            wy = scale * (l2h * sin(h3) + l3h * sin(h3 + h4))
            wz = scale * (-(l2h * cos(h3) + l3h * cos(h3 + h4)))
            r = sqrt(wy * wy + wz * wz)
            r_min = abs(l2r - l3r) + margin
            r_max = (l2r + l3r) - margin
            if r < r_min:
                if r == 0.0:
                    wy = 0.0
                    wz = -r_min
                else:
                    sc = r_min / r
                    wy = wy * sc
                    wz = wz * sc
            elif r > r_max:
                sc = r_max / r
                wy = wy * sc
                wz = wz * sc
            by = wy
            bz = -wz
            c4 = (by * by + bz * bz - l2r * l2r - l3r * l3r) / (2.0 * l2r * l3r)
            if c4 > 1.0:
                c4 = 1.0
            elif c4 < -1.0:
                c4 = -1.0
            m4 = acos(c4)
            psi = atan2(l3r * sin(m4), l2r + l3r * c4)
            m3 = atan2(by, bz) - psi
            if m3 > pi:
                m3 -= _TWO_PI
            elif m3 <= -pi:
                m3 += _TWO_PI
            if not (rlo3 <= m3 <= rhi3):
                if rlo3 <= m3 + _TWO_PI <= rhi3:
                    m3 += _TWO_PI
                elif rlo3 <= m3 - _TWO_PI <= rhi3:
                    m3 -= _TWO_PI
        m1 = h1
        m2 = h2
        if m1 < rlo1:
            m1 = rlo1
        elif m1 > rhi1:
            m1 = rhi1
        if m2 < rlo2:
            m2 = rlo2
        elif m2 > rhi2:
            m2 = rhi2
        if m3 < rlo3:
            m3 = rlo3
        elif m3 > rhi3:
            m3 = rhi3
        if m4 < rlo4:
            m4 = rlo4
        elif m4 > rhi4:
            m4 = rhi4

        # velocity approximator (dirty derivative)
        y1 = alpha * py1 + beta * ((m1 - pu1) / dt)
        y2 = alpha * py2 + beta * ((m2 - pu2) / dt)
        y3 = alpha * py3 + beta * ((m3 - pu3) / dt)
        y4 = alpha * py4 + beta * ((m4 - pu4) / dt)
        pu1, pu2, pu3, pu4 = m1, m2, m3, m4
        py1, py2, py3, py4 = y1, y2, y3, y4

        # actuator-space commands
        pc1 = m1 + m2
        pc2 = m1 - m2
        pc3 = m3
        pc4 = m3 + m4
        vc1 = y1 + y2
        vc2 = y1 - y2
        vc3 = y3
        vc4 = y3 + y4

        # PD torques with saturation
        tau1 = kp1 * (pc1 - phi1) + kd1 * (vc1 - v1)
        tau2 = kp2 * (pc2 - phi2) + kd2 * (vc2 - v2)
        tau3 = kp3 * (pc3 - phi3) + kd3 * (vc3 - v3)
        tau4 = kp4 * (pc4 - phi4) + kd4 * (vc4 - v4)
        if tau1 > tm1:
            tau1 = tm1
        elif tau1 < -tm1:
            tau1 = -tm1
        if tau2 > tm2:
            tau2 = tm2
        elif tau2 < -tm2:
            tau2 = -tm2
        if tau3 > tm3:
            tau3 = tm3
        elif tau3 < -tm3:
            tau3 = -tm3
        if tau4 > tm4:
            tau4 = tm4
        elif tau4 < -tm4:
            tau4 = -tm4

        # semi-implicit Euler with hard stops
        v1 = v1 + ((tau1 - b1 * v1) / j1) * dt
        phi1 = phi1 + v1 * dt
        if phi1 < alo1:
            phi1 = alo1
            if v1 < 0.0:
                v1 = 0.0
        elif phi1 > ahi1:
            phi1 = ahi1
            if v1 > 0.0:
                v1 = 0.0
        v2 = v2 + ((tau2 - b2 * v2) / j2) * dt
        phi2 = phi2 + v2 * dt
        if phi2 < alo2:
            phi2 = alo2
            if v2 < 0.0:
                v2 = 0.0
        elif phi2 > ahi2:
            phi2 = ahi2
            if v2 > 0.0:
                v2 = 0.0
        v3 = v3 + ((tau3 - b3 * v3) / j3) * dt
        phi3 = phi3 + v3 * dt
        if phi3 < alo3:
            phi3 = alo3
            if v3 < 0.0:
                v3 = 0.0
        elif phi3 > ahi3:
            phi3 = ahi3
            if v3 > 0.0:
                v3 = 0.0
        v4 = v4 + ((tau4 - b4 * v4) / j4) * dt
        phi4 = phi4 + v4 * dt
        if phi4 < alo4:
            phi4 = alo4
            if v4 < 0.0:
                v4 = 0.0
        elif phi4 > ahi4:
            phi4 = ahi4
            if v4 > 0.0:
                v4 = 0.0

        # robot topological pose and wrist
        r1 = 0.5 * (phi1 + phi2)
        r2 = 0.5 * (phi1 - phi2)
        r3 = phi3
        r4 = phi4 - phi3
        c1 = cos(r1)
        s1 = sin(r1)
        c2 = cos(r2)
        s2 = sin(r2)
        ut = l2r * sin(r3) + l3r * sin(r3 + r4)
        uz = -(l1r + l2r * cos(r3) + l3r * cos(r3 + r4))
        rwx = c1 * ut + (-s1 * s2) * uz
        rwy = s1 * ut + (c1 * s2) * uz
        rwz = c2 * uz

        if t % log_every == 0:
            hc1 = cos(h1)
            hs1 = sin(h1)
            hc2 = cos(h2)
            hs2 = sin(h2)
            hut = l2h * sin(h3) + l3h * sin(h3 + h4)
            huz = -(l1h + l2h * cos(h3) + l3h * cos(h3 + h4))
            hwx = hc1 * hut + (-hs1 * hs2) * huz
            hwy = hs1 * hut + (hc1 * hs2) * huz
            hwz = hc2 * huz
            row = row0 + rows
            out_log[row, 0] = t
            out_log[row, 1] = h1
            out_log[row, 2] = h2
            out_log[row, 3] = h3
            out_log[row, 4] = h4
            out_log[row, 5] = m1
            out_log[row, 6] = m2
            out_log[row, 7] = m3
            out_log[row, 8] = m4
            out_log[row, 9] = phi1
            out_log[row, 10] = phi2
            out_log[row, 11] = phi3
            out_log[row, 12] = phi4
            out_log[row, 13] = rwx
            out_log[row, 14] = rwy
            out_log[row, 15] = rwz
            out_log[row, 16] = hwx
            out_log[row, 17] = hwy
            out_log[row, 18] = hwz
            rows += 1

        if has_target and t >= check_from:
            dx = rwx - tx
            dy = rwy - ty
            dz = rwz - tz
            if dx * dx + dy * dy + dz * dz <= r2lim:
                hit_tick = t
                break

    state[0] = phi1
    state[1] = phi2
    state[2] = phi3
    state[3] = phi4
    state[4] = v1
    state[5] = v2
    state[6] = v3
    state[7] = v4
    state[8] = pu1
    state[9] = pu2
    state[10] = pu3
    state[11] = pu4
    state[12] = py1
    state[13] = py2
    state[14] = py3
    state[15] = py4
    return t, hit_tick, rows
