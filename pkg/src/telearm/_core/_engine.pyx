# cython: boundscheck=False, wraparound=False, cdivision=False
"""Compiled simulation kernel.

Mirrors engine_py.py expression for expression: any edit here must be
applied there too.  Built with -ffp-contract=off so arithmetic matches the
interpreter's bit for bit (both call the platform libm).
"""

from libc.math cimport acos, atan2, cos, fabs, sin, sqrt, M_PI

BACKEND_NAME = "compiled"

cdef double _TWO_PI = 2.0 * M_PI


def run_piece(
    double[:] state,
    double[:] params,
    int mode,
    double f1, double f2, double f3, double f4,
    double g1, double g2, double g3, double g4,
    long long move_start, long long move_ticks,
    long long start_tick, long long end_tick,
    bint has_target, double tx, double ty, double tz,
    double radius, long long check_from,
    long long log_every, double[:, :] out_log, long long row0,
):
    """Advance ticks start_tick+1 .. end_tick along one pilot motion piece.

    Same contract as the pure-Python twin: returns
    (last_tick, hit_tick, rows_written) with hit_tick -1 for no hit.
    """
    cdef double l1h = params[0], l2h = params[1], l3h = params[2]
    cdef double l1r = params[3], l2r = params[4], l3r = params[5]
    cdef double scale = params[6]
    cdef double rlo1 = params[7], rlo2 = params[8], rlo3 = params[9], rlo4 = params[10]
    cdef double rhi1 = params[11], rhi2 = params[12], rhi3 = params[13], rhi4 = params[14]
    cdef double alpha = params[15], beta = params[16], dt = params[17]
    cdef double kp1 = params[18], kp2 = params[19], kp3 = params[20], kp4 = params[21]
    cdef double kd1 = params[22], kd2 = params[23], kd3 = params[24], kd4 = params[25]
    cdef double j1 = params[26], j2 = params[27], j3 = params[28], j4 = params[29]
    cdef double b1 = params[30], b2 = params[31], b3 = params[32], b4 = params[33]
    cdef double tm1 = params[34], tm2 = params[35], tm3 = params[36], tm4 = params[37]
    cdef double alo1 = params[38], alo2 = params[39], alo3 = params[40], alo4 = params[41]
    cdef double ahi1 = params[42], ahi2 = params[43], ahi3 = params[44], ahi4 = params[45]
    cdef double margin = params[46]

    cdef double phi1 = state[0], phi2 = state[1], phi3 = state[2], phi4 = state[3]
    cdef double v1 = state[4], v2 = state[5], v3 = state[6], v4 = state[7]
    cdef double pu1 = state[8], pu2 = state[9], pu3 = state[10], pu4 = state[11]
    cdef double py1 = state[12], py2 = state[13], py3 = state[14], py4 = state[15]

    cdef long long move_end = move_start + move_ticks
    cdef double r2lim = radius * radius
    cdef long long hit_tick = -1
    cdef long long rows = 0

    cdef long long t = start_tick
    cdef long long row
    cdef double h1, h2, h3, h4, m1, m2, m3, m4
    cdef double sb, sb2, sb3, blend
    cdef double wy, wz, r, r_min, r_max, sc, by, bz, c4, psi
    cdef double y1, y2, y3, y4
    cdef double pc1, pc2, pc3, pc4, vc1, vc2, vc3, vc4
    cdef double tau1, tau2, tau3, tau4
    cdef double r1, r2, r3, r4, c1, s1, c2, s2, ut, uz, rwx, rwy, rwz
    cdef double hc1, hs1, hc2, hs2, hut, huz, hwx, hwy, hwz
    cdef double dx, dy, dz

    while t < end_tick:
        t += 1

        # pilot pose on this piece
        if t < move_start:
            h1 = f1; h2 = f2; h3 = f3; h4 = f4
        elif t >= move_end:
            h1 = g1; h2 = g2; h3 = g3; h4 = g4
        else:
            sb = (<double>(t - move_start)) / (<double>move_ticks)
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
            r_min = fabs(l2r - l3r) + margin
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
            if m3 > M_PI:
                m3 -= _TWO_PI
            elif m3 <= -M_PI:
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
        pu1 = m1; pu2 = m2; pu3 = m3; pu4 = m4
        py1 = y1; py2 = y2; py3 = y3; py4 = y4

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
