# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled episode loops.

Same arithmetic as the reference loop in :mod:`chaosrl.episode`, fused into
one C loop that also exploits the sparsity of the sensor image.  Summation
order differs from BLAS, so trajectories agree with the reference only up to
rounding (which the chaotic actor then amplifies).
"""

from libc.math cimport tanh, fabs, fmod, atan2, asin, cos, sin, sqrt, hypot

import numpy as np

cdef extern from *:
    """
    #if defined(__SSE__) || defined(__x86_64__)
    #include <xmmintrin.h>
    static unsigned int chaosrl_ftz_enter(void) {
        unsigned int old = _mm_getcsr();
        _mm_setcsr(old | 0x8040);  /* FTZ | DAZ */
        return old;
    }
    static void chaosrl_ftz_exit(unsigned int old) { _mm_setcsr(old); }
    #else
    static unsigned int chaosrl_ftz_enter(void) { return 0; }
    static void chaosrl_ftz_exit(unsigned int old) { (void)old; }
    #endif

    /* y[j] += a[j] * s */
    static __attribute__((noinline)) void chaosrl_axpy(double *restrict y, const double *restrict a, double s, int n) {
        for (int j = 0; j < n; ++j) y[j] += a[j] * s;
    }
    /* each length-n row r of c: c[r, j] *= f[j] */
    static __attribute__((noinline)) void chaosrl_decay_rows(double *restrict c, const double *restrict f, int rows, int n) {
        for (int r = 0; r < rows; ++r) {
            double *restrict row = c + (long)r * n;
            for (int j = 0; j < n; ++j) row[j] = row[j] * f[j];
        }
    }
    /* w[i] += k * c[i] */
    static __attribute__((noinline)) void chaosrl_add_scaled(double *restrict w, const double *restrict c, double k, long n) {
        for (long i = 0; i < n; ++i) w[i] += k * c[i];
    }
    """
    # Decaying traces pass through the subnormal range, which is ~100x slower
    # on x86; flushing them to zero changes nothing above 1e-308.
    unsigned int chaosrl_ftz_enter() noexcept nogil
    void chaosrl_ftz_exit(unsigned int old) noexcept nogil
    void chaosrl_axpy(double* y, const double* a, double s, int n) noexcept nogil
    void chaosrl_decay_rows(double* c, const double* f, int rows, int n) noexcept nogil
    void chaosrl_add_scaled(double* w, const double* c, double k, long n) noexcept nogil

cdef double HALF_OPEN = 0.49999999999999994
cdef double TWO_PI = 6.283185307179586

# log column indices, matching chaosrl.episode.LOG_COLUMNS
cdef enum:
    C_STEP, C_X, C_Y, C_HEADING, C_AL, C_AR, C_REWARD, C_TD, C_VNOW, C_COLL, C_REACHED,
    C_HNORM, C_NL, C_NR, C_OX, C_OY, N_COLS

N_LOG_COLUMNS = N_COLS


cdef inline double ssig(double u) noexcept nogil:
    cdef double y = 0.5 * tanh(0.5 * u)
    if y > HALF_OPEN:
        return HALF_OPEN
    if y < -HALF_OPEN:
        return -HALF_OPEN
    return y


cdef inline double pymod(double a, double b) noexcept nogil:
    cdef double m = fmod(a, b)
    if m != 0.0 and ((m < 0.0) != (b < 0.0)):
        m += b
    return m


cdef struct World:
    double field_half
    double gx, gy, goal_r
    double robot_r, obs_r
    int max_steps
    int n_cells
    double speed_scale, axle
    double d_max
    double reward_goal, penalty, gamma


cdef World make_world(object w, object td):
    cdef World c
    c.field_half = w.field_half
    c.gx = w.goal_center[0]
    c.gy = w.goal_center[1]
    c.goal_r = w.goal_radius
    c.robot_r = w.robot_radius
    c.obs_r = w.obstacle_radius
    c.max_steps = w.max_steps
    c.n_cells = w.sensor_cells
    c.speed_scale = w.wheel_speed_scale
    c.axle = w.axle_width
    c.d_max = w.d_max
    c.reward_goal = td.reward_goal
    c.penalty = td.penalty_collision
    c.gamma = td.gamma
    return c


cdef void object_cells(double* out, const World* w, double rx, double ry, double heading,
                       double ox, double oy, double radius) noexcept nogil:
    cdef int n = w.n_cells, k
    cdef double dx = ox - rx, dy = oy - ry
    cdef double d = hypot(dx, dy)
    cdef double value = 1.0 - d / w.d_max
    cdef double cell, bearing, half, dist
    if value < 0.0:
        value = 0.0
    value *= 0.5
    for k in range(n):
        out[k] = 0.0
    if value == 0.0:
        return
    if d <= radius:
        for k in range(n):
            out[k] = value
        return
    cell = TWO_PI / n
    bearing = (atan2(dy, dx) - heading) / cell
    half = asin(radius / d) / cell
    for k in range(n):
        dist = fabs(pymod(k - bearing + n / 2.0, n) - n / 2.0)
        if dist < 0.5 + half:
            out[k] = value


cdef int sense(double* x, int* nz, const World* w, double rx, double ry, double heading,
               double ox, double oy) noexcept nogil:
    cdef int n = w.n_cells, i, nnz = 0
    object_cells(x, w, rx, ry, heading, w.gx, w.gy, w.goal_r)
    object_cells(x + n, w, rx, ry, heading, ox, oy, w.obs_r)
    for i in range(2 * n):
        if x[i] != 0.0:
            nz[nnz] = i
            nnz += 1
    return nnz


cdef int move(double* st, const World* w, double left, double right) noexcept nogil:
    """st = [x, y, heading, ox, oy]; returns 1 on obstacle contact."""
    cdef double v_l = left * w.speed_scale, v_r = right * w.speed_scale
    cdef double heading = pymod(st[2] + (v_r - v_l) / w.axle, TWO_PI)
    cdef double speed = 0.5 * (v_l + v_r)
    cdef double x0 = st[0], y0 = st[1]
    cdef double lim = w.field_half - w.robot_r
    cdef double x = x0 + speed * cos(heading), y = y0 + speed * sin(heading)
    cdef double ox = st[3], oy = st[4], reach = w.robot_r + w.obs_r
    cdef double d, d0, ux, uy, px, py
    cdef int collided = 0
    x = min(max(x, -lim), lim)
    y = min(max(y, -lim), lim)
    d = hypot(x - ox, y - oy)
    if d < reach:
        collided = 1
        if d > 0.0:
            ux = (x - ox) / d
            uy = (y - oy) / d
        else:
            d0 = hypot(x0 - ox, y0 - oy)
            if d0 > 0.0:
                ux = (x0 - ox) / d0
                uy = (y0 - oy) / d0
            else:
                ux = 1.0
                uy = 0.0
        px = ox + ux * reach * (1.0 + 1e-12)
        py = oy + uy * reach * (1.0 + 1e-12)
        if fabs(px) <= lim and fabs(py) <= lim:
            x = px
            y = py
        else:
            x = x0
            y = y0
    st[0] = x
    st[1] = y
    st[2] = heading
    return collided


cdef double critic_value(double[:, ::1] cw_in, double[::1] cw_out, double* x, int* nz,
                         int nnz, double* hc) noexcept nogil:
    cdef int nh = cw_in.shape[0], j, a
    cdef double s, v = 0.0
    for j in range(nh):
        s = 0.0
        for a in range(nnz):
            s += cw_in[j, nz[a]] * x[nz[a]]
        hc[j] = ssig(s)
        v += cw_out[j] * hc[j]
    return v


cdef void critic_update(double[:, ::1] cw_in, double[::1] cw_out, double* x, int* nz,
                        int nnz, double* hc, double k) noexcept nogil:
    cdef int nh = cw_in.shape[0], j, a
    cdef double delta
    for j in range(nh):
        delta = cw_out[j] * (0.25 - hc[j] * hc[j])
        for a in range(nnz):
            cw_in[j, nz[a]] += k * (delta * x[nz[a]])
        cw_out[j] += k * hc[j]


def run_chaotic(double[:, ::1] w_in, double[:, ::1] w_out, double[:, ::1] w_fb,
                double[:, ::1] cw_in, double[::1] cw_out,
                double[:, ::1] c_in, double[:, ::1] c_out,
                double[::1] hidden, double[::1] potential, double[::1] output,
                tuple start, object world, object td_cfg, bint train,
                double[:, ::1] log):
    """Run one chaotic-actor episode in place; returns the number of rows logged.

    Actor state, traces and all weights are updated in place.  ``start`` is
    ``(x, y, heading, obstacle_x, obstacle_y)``.
    """
    cdef World w = make_world(world, td_cfg)
    cdef int ni = w_in.shape[1], nh = w_in.shape[0], no = w_out.shape[0]
    cdef int nch = cw_in.shape[0]
    cdef double eta_a = td_cfg.eta_actor, eta_c = td_cfg.eta_critic
    if ni != 2 * w.n_cells:
        raise ValueError("actor input size does not match the sensor layout")
    if w_fb.shape[0] != nh or w_fb.shape[1] != nh or w_out.shape[1] != nh:
        raise ValueError("inconsistent actor shapes")
    if c_in.shape[0] != nh or c_in.shape[1] != ni or c_out.shape[0] != no or c_out.shape[1] != nh:
        raise ValueError("trace shapes do not match the actor")
    if log.shape[0] < w.max_steps or log.shape[1] != N_COLS:
        raise ValueError("log buffer has the wrong shape")

    # Transposed working copies: every hot loop below runs contiguously over
    # hidden units, accumulating each sum in the same order as a row dot product.
    cdef double[:, ::1] win_t = np.ascontiguousarray(np.asarray(w_in).T)
    cdef double[:, ::1] wfb_t = np.ascontiguousarray(np.asarray(w_fb).T)
    cdef double[:, ::1] cin_t = np.zeros((ni, nh))
    cdef double* WI = &win_t[0, 0]
    cdef double* WF = &wfb_t[0, 0]
    cdef double* CI = &cin_t[0, 0]
    cdef double[::1] x_a = np.zeros(ni), x_b = np.zeros(ni)
    cdef int[::1] nz_a = np.zeros(ni, dtype=np.intc), nz_b = np.zeros(ni, dtype=np.intc)
    cdef double[::1] hc_a = np.zeros(nch), hc_b = np.zeros(nch)
    cdef double[::1] h_prev_v = np.zeros(nh), s_v = np.zeros(nh), f_v = np.zeros(nh)
    cdef double[::1] dx_v = np.zeros(nh), decay_v = np.zeros(nh), y_prev = np.zeros(no)
    cdef double* h_prev = &h_prev_v[0]
    cdef double* sv = &s_v[0]
    cdef double* fv = &f_v[0]
    cdef double* dxv = &dx_v[0]
    cdef double* dec = &decay_v[0]
    cdef double* H = &hidden[0]
    cdef double* x = &x_a[0]
    cdef double* xn = &x_b[0]
    cdef int* nz = &nz_a[0]
    cdef int* nzn = &nz_b[0]
    cdef double* hc = &hc_a[0]
    cdef double* hcn = &hc_b[0]
    cdef double* tmp_d
    cdef int* tmp_i
    cdef double st[5]
    cdef int nnz, nnzn, t = 0, i, j, k, a, collided, reached, terminal, step = 0
    cdef double s, f, dx, v_now, v_next, reward, td, kk, gx, gy, hn

    st[0] = start[0]
    st[1] = start[1]
    st[2] = start[2]
    st[3] = start[3]
    st[4] = start[4]

    cdef unsigned int csr
    with nogil:
        csr = chaosrl_ftz_enter()
        for j in range(nh):
            H[j] = 0.0
            potential[j] = 0.0
        for k in range(no):
            output[k] = 0.0
        for k in range(no):
            for j in range(nh):
                c_out[k, j] = 0.0

        nnz = sense(x, nz, &w, st[0], st[1], st[2], st[3], st[4])
        v_now = critic_value(cw_in, cw_out, x, nz, nnz, hc)
        while True:
            # actor step
            for j in range(nh):
                h_prev[j] = H[j]
                sv[j] = 0.0
                fv[j] = 0.0
            for a in range(nnz):
                i = nz[a]
                chaosrl_axpy(sv, WI + i * nh, x[i], nh)
            for i in range(nh):
                chaosrl_axpy(fv, WF + i * nh, h_prev[i], nh)
            hn = 0.0
            for j in range(nh):
                potential[j] = sv[j] + fv[j]
                H[j] = ssig(potential[j])
                hn += H[j] * H[j]
            for k in range(no):
                y_prev[k] = output[k]
                s = 0.0
                for j in range(nh):
                    s += w_out[k, j] * H[j]
                output[k] = ssig(s)

            collided = move(st, &w, output[0], output[1])
            step += 1
            gx = st[0] - w.gx
            gy = st[1] - w.gy
            reached = hypot(gx, gy) < w.goal_r
            if reached:
                reward = w.reward_goal
            elif collided:
                reward = w.penalty
            else:
                reward = 0.0
            terminal = reached or step >= w.max_steps

            nnzn = sense(xn, nzn, &w, st[0], st[1], st[2], st[3], st[4])
            v_next = critic_value(cw_in, cw_out, xn, nzn, nnzn, hcn)
            if reached:
                td = reward - v_now
            else:
                td = reward + w.gamma * v_next - v_now

            if train:
                # causality traces, hidden layer
                for j in range(nh):
                    dxv[j] = H[j] - h_prev[j]
                    dec[j] = 1.0 - fabs(dxv[j])
                chaosrl_decay_rows(CI, dec, ni, nh)
                for a in range(nnz):
                    i = nz[a]
                    chaosrl_axpy(CI + i * nh, dxv, x[i], nh)
                # output layer
                for k in range(no):
                    dx = output[k] - y_prev[k]
                    f = 1.0 - fabs(dx)
                    for j in range(nh):
                        c_out[k, j] = c_out[k, j] * f + dx * H[j]
                if td != 0.0:
                    kk = eta_a * td
                    chaosrl_add_scaled(WI, CI, kk, <long>ni * nh)
                    for k in range(no):
                        for j in range(nh):
                            w_out[k, j] += kk * c_out[k, j]
                    critic_update(cw_in, cw_out, x, nz, nnz, hc, eta_c * td)
                    v_next = critic_value(cw_in, cw_out, xn, nzn, nnzn, hcn)

            log[t, C_STEP] = step
            log[t, C_X] = st[0]
            log[t, C_Y] = st[1]
            log[t, C_HEADING] = st[2]
            log[t, C_AL] = output[0]
            log[t, C_AR] = output[1]
            log[t, C_REWARD] = reward
            log[t, C_TD] = td
            log[t, C_VNOW] = v_now
            log[t, C_COLL] = collided
            log[t, C_REACHED] = reached
            log[t, C_HNORM] = sqrt(hn)
            log[t, C_NL] = 0.0
            log[t, C_NR] = 0.0
            log[t, C_OX] = st[3]
            log[t, C_OY] = st[4]
            t += 1
            if terminal:
                break
            tmp_d = x; x = xn; xn = tmp_d
            tmp_i = nz; nz = nzn; nzn = tmp_i
            tmp_d = hc; hc = hcn; hcn = tmp_d
            nnz = nnzn
            v_now = v_next
        chaosrl_ftz_exit(csr)

        for j in range(nh):
            for i in range(ni):
                c_in[j, i] = cin_t[i, j]
                if train:
                    w_in[j, i] = win_t[i, j]
    return t


def run_baseline(double[:, ::1] w_in, double[:, ::1] w_out,
                 double[:, ::1] cw_in, double[::1] cw_out,
                 double[:, ::1] noise, tuple start, object world, object td_cfg, bint train,
                 double[:, ::1] log):
    """Run one external-noise baseline episode in place; returns rows logged.

    ``noise`` holds one pre-drawn (left, right) pair per possible step; in
    eval mode pass zeros.
    """
    cdef World w = make_world(world, td_cfg)
    cdef int ni = w_in.shape[1], nh = w_in.shape[0], no = w_out.shape[0]
    cdef int nch = cw_in.shape[0]
    cdef double eta_a = td_cfg.eta_actor, eta_c = td_cfg.eta_critic
    if ni != 2 * w.n_cells or no != 2:
        raise ValueError("actor shape does not match the sensor/wheel layout")
    if log.shape[0] < w.max_steps or log.shape[1] != N_COLS:
        raise ValueError("log buffer has the wrong shape")
    if noise.shape[0] < w.max_steps or noise.shape[1] != 2:
        raise ValueError("noise buffer has the wrong shape")

    cdef double[::1] x_a = np.zeros(ni), x_b = np.zeros(ni)
    cdef int[::1] nz_a = np.zeros(ni, dtype=np.intc), nz_b = np.zeros(ni, dtype=np.intc)
    cdef double[::1] hc_a = np.zeros(nch), hc_b = np.zeros(nch)
    cdef double[::1] h = np.zeros(nh), d_hid = np.zeros(nh)
    cdef double* x = &x_a[0]
    cdef double* xn = &x_b[0]
    cdef int* nz = &nz_a[0]
    cdef int* nzn = &nz_b[0]
    cdef double* hc = &hc_a[0]
    cdef double* hcn = &hc_b[0]
    cdef double* tmp_d
    cdef int* tmp_i
    cdef double st[5]
    cdef double y[2]
    cdef double act[2]
    cdef double eps[2]
    cdef double d_out[2]
    cdef int nnz, nnzn, t = 0, i, j, k, a, collided, reached, terminal, step = 0
    cdef double s, v_now, v_next, reward, td, gx, gy, hn

    st[0] = start[0]
    st[1] = start[1]
    st[2] = start[2]
    st[3] = start[3]
    st[4] = start[4]

    with nogil:
        nnz = sense(x, nz, &w, st[0], st[1], st[2], st[3], st[4])
        v_now = critic_value(cw_in, cw_out, x, nz, nnz, hc)
        while True:
            hn = 0.0
            for j in range(nh):
                s = 0.0
                for a in range(nnz):
                    s += w_in[j, nz[a]] * x[nz[a]]
                h[j] = ssig(s)
                hn += h[j] * h[j]
            for k in range(2):
                s = 0.0
                for j in range(nh):
                    s += w_out[k, j] * h[j]
                y[k] = ssig(s)
                act[k] = min(max(y[k] + noise[t, k], -0.5), 0.5)
                eps[k] = act[k] - y[k]

            collided = move(st, &w, act[0], act[1])
            step += 1
            gx = st[0] - w.gx
            gy = st[1] - w.gy
            reached = hypot(gx, gy) < w.goal_r
            if reached:
                reward = w.reward_goal
            elif collided:
                reward = w.penalty
            else:
                reward = 0.0
            terminal = reached or step >= w.max_steps

            nnzn = sense(xn, nzn, &w, st[0], st[1], st[2], st[3], st[4])
            v_next = critic_value(cw_in, cw_out, xn, nzn, nnzn, hcn)
            if reached:
                td = reward - v_now
            else:
                td = reward + w.gamma * v_next - v_now

            if train and td != 0.0:
                if eps[0] != 0.0 or eps[1] != 0.0:
                    for k in range(2):
                        d_out[k] = td * eps[k] * (0.25 - y[k] * y[k])
                    for j in range(nh):
                        s = 0.0
                        for k in range(2):
                            s += w_out[k, j] * d_out[k]
                        d_hid[j] = s * (0.25 - h[j] * h[j])
                    for k in range(2):
                        for j in range(nh):
                            w_out[k, j] += eta_a * (d_out[k] * h[j])
                    for j in range(nh):
                        for a in range(nnz):
                            i = nz[a]
                            w_in[j, i] += eta_a * (d_hid[j] * x[i])
                critic_update(cw_in, cw_out, x, nz, nnz, hc, eta_c * td)
                v_next = critic_value(cw_in, cw_out, xn, nzn, nnzn, hcn)

            log[t, C_STEP] = step
            log[t, C_X] = st[0]
            log[t, C_Y] = st[1]
            log[t, C_HEADING] = st[2]
            log[t, C_AL] = act[0]
            log[t, C_AR] = act[1]
            log[t, C_REWARD] = reward
            log[t, C_TD] = td
            log[t, C_VNOW] = v_now
            log[t, C_COLL] = collided
            log[t, C_REACHED] = reached
            log[t, C_HNORM] = sqrt(hn)
            log[t, C_NL] = eps[0]
            log[t, C_NR] = eps[1]
            log[t, C_OX] = st[3]
            log[t, C_OY] = st[4]
            t += 1
            if terminal:
                break
            tmp_d = x; x = xn; xn = tmp_d
            tmp_i = nz; nz = nzn; nzn = tmp_i
            tmp_d = hc; hc = hcn; hcn = tmp_d
            nnz = nnzn
            v_now = v_next
    return t
