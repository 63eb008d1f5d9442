# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled backend: fused episode rollouts and Monte Carlo loops.

Mirrors ``_pykernels`` function for function; the RNG arithmetic, draw
counters, environment dynamics, and tie-breaking rules must match the pure
module exactly.  Keep the two in lockstep.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, exp, fabs, fmod, log, sin, sqrt

cnp.import_array()

BACKEND_NAME = "compiled"

cdef extern from *:
    int __builtin_popcountll(unsigned long long) nogil

ctypedef unsigned long long u64

cdef double PI = 3.14159265358979323846
cdef double INV53 = 1.0 / 9007199254740992.0
cdef u64 GOLDEN = 0x9E3779B97F4A7C15ULL

# ---------------------------------------------------------------------------
# counter-based RNG (identical to twotower.rng)
# ---------------------------------------------------------------------------

cdef inline u64 c_mix64(u64 z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)

cdef inline u64 c_derive1(u64 key, u64 tag) nogil:
    return c_mix64(key ^ c_mix64(tag + GOLDEN))

cdef inline u64 c_raw(u64 key, u64 counter) nogil:
    return c_mix64(key + (counter + 1) * GOLDEN)

cdef inline double c_u01(u64 key, u64 counter) nogil:
    return <double>(c_raw(key, counter) >> 11) * INV53

cdef inline double c_normal(u64 key, u64 raw_counter) nogil:
    # Box-Muller cosine branch; normal i uses raw counters (2i, 2i+1)
    cdef double u1 = (<double>(c_raw(key, raw_counter) >> 11) + 1.0) * INV53
    cdef double u2 = <double>(c_raw(key, raw_counter + 1) >> 11) * INV53
    return sqrt(-2.0 * log(u1)) * cos(2.0 * PI * u2)


def fill_u64(key, start, n):
    cdef cnp.ndarray[cnp.uint64_t, ndim=1] out = np.empty(int(n), dtype=np.uint64)
    cdef u64 k = <u64>(int(key) & 0xFFFFFFFFFFFFFFFF)
    cdef u64 s = <u64>int(start)
    cdef Py_ssize_t i, m = int(n)
    for i in range(m):
        out[i] = c_raw(k, s + <u64>i)
    return out


def fill_uniform(key, start, n):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(int(n))
    cdef u64 k = <u64>(int(key) & 0xFFFFFFFFFFFFFFFF)
    cdef u64 s = <u64>int(start)
    cdef Py_ssize_t i, m = int(n)
    for i in range(m):
        out[i] = c_u01(k, s + <u64>i)
    return out


def fill_normal(key, start, n):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(int(n))
    cdef u64 k = <u64>(int(key) & 0xFFFFFFFFFFFFFFFF)
    cdef u64 s = <u64>int(start)
    cdef Py_ssize_t i, m = int(n)
    for i in range(m):
        out[i] = c_normal(k, s + <u64>(2 * i))
    return out

# ---------------------------------------------------------------------------
# bias-free MLP forward
# ---------------------------------------------------------------------------

cdef void c_forward(const double* p, const long* dims, int nlayers, int all_linear,
                    const double* x, double* sa, double* sb, double* out) nogil:
    """out <- tower(x); sa/sb are scratch of the max layer width."""
    cdef Py_ssize_t k, i, j
    cdef long n_in, n_out
    cdef const double* src = x
    cdef double* dst
    cdef long ofs = 0
    cdef double acc
    for k in range(nlayers):
        n_in = dims[k]
        n_out = dims[k + 1]
        if k == nlayers - 1:
            dst = out
        elif k % 2 == 0:
            dst = sa
        else:
            dst = sb
        for i in range(n_out):
            acc = 0.0
            for j in range(n_in):
                acc += p[ofs + i * n_in + j] * src[j]
            if k < nlayers - 1 and not all_linear:
                if acc < 0.0:
                    acc = 0.0
            dst[i] = acc
        ofs += n_in * n_out
        src = dst

# ---------------------------------------------------------------------------
# environments (constants identical to twotower.envs)
# ---------------------------------------------------------------------------

cdef int ENV_CARTPOLE = 0
cdef int ENV_MOUNTAINCAR = 1
cdef int ENV_MCC = 2
cdef int ENV_PENDULUM = 3
cdef u64 TAG_ENV_INIT = 0xE0ULL

cdef void env_reset(int env_id, u64 env_seed, double* st) nogil:
    cdef u64 key = c_derive1(env_seed, TAG_ENV_INIT)
    if env_id == ENV_CARTPOLE:
        st[0] = -0.05 + 0.1 * c_u01(key, 0)
        st[1] = -0.05 + 0.1 * c_u01(key, 1)
        st[2] = -0.05 + 0.1 * c_u01(key, 2)
        st[3] = -0.05 + 0.1 * c_u01(key, 3)
    elif env_id == ENV_MOUNTAINCAR or env_id == ENV_MCC:
        st[0] = -0.6 + 0.2 * c_u01(key, 0)
        st[1] = 0.0
    else:
        st[0] = -PI + 2.0 * PI * c_u01(key, 0)
        st[1] = -1.0 + 2.0 * c_u01(key, 1)

cdef int env_obs_dim(int env_id) nogil:
    if env_id == ENV_CARTPOLE:
        return 4
    if env_id == ENV_PENDULUM:
        return 3
    return 2

cdef void env_observe(int env_id, const double* st, double* obs) nogil:
    if env_id == ENV_CARTPOLE:
        obs[0] = st[0]; obs[1] = st[1]; obs[2] = st[2]; obs[3] = st[3]
    elif env_id == ENV_PENDULUM:
        obs[0] = cos(st[0]); obs[1] = sin(st[0]); obs[2] = st[1]
    else:
        obs[0] = st[0]; obs[1] = st[1]

cdef double env_step(int env_id, double* st, const double* action, int action_idx,
                     int* terminated) nogil:
    cdef double force, cos_t, sin_t, temp, theta_acc, x_acc, u, th_wrapped, cost, new_th_dot
    terminated[0] = 0
    if env_id == ENV_CARTPOLE:
        force = 10.0 if action_idx == 1 else -10.0
        cos_t = cos(st[2])
        sin_t = sin(st[2])
        temp = (force + 0.05 * st[3] * st[3] * sin_t) / 1.1
        theta_acc = (9.8 * sin_t - cos_t * temp) / (0.5 * (4.0 / 3.0 - 0.1 * cos_t * cos_t / 1.1))
        x_acc = temp - 0.05 * theta_acc * cos_t / 1.1
        st[0] += 0.02 * st[1]
        st[1] += 0.02 * x_acc
        st[2] += 0.02 * st[3]
        st[3] += 0.02 * theta_acc
        if fabs(st[0]) > 2.4 or fabs(st[2]) > 0.2094395102393195:
            terminated[0] = 1
        return 1.0
    if env_id == ENV_MOUNTAINCAR:
        st[1] += (action_idx - 1) * 0.001 - 0.0025 * cos(3.0 * st[0])
        if st[1] < -0.07:
            st[1] = -0.07
        elif st[1] > 0.07:
            st[1] = 0.07
        st[0] += st[1]
        if st[0] < -1.2:
            st[0] = -1.2
        elif st[0] > 0.6:
            st[0] = 0.6
        if st[0] <= -1.2 and st[1] < 0.0:
            st[1] = 0.0
        if st[0] >= 0.5:
            terminated[0] = 1
        return -1.0
    if env_id == ENV_MCC:
        u = action[0]
        if u < -1.0:
            u = -1.0
        elif u > 1.0:
            u = 1.0
        st[1] += u * 0.0015 - 0.0025 * cos(3.0 * st[0])
        if st[1] < -0.07:
            st[1] = -0.07
        elif st[1] > 0.07:
            st[1] = 0.07
        st[0] += st[1]
        if st[0] < -1.2:
            st[0] = -1.2
        elif st[0] > 0.6:
            st[0] = 0.6
        if st[0] <= -1.2 and st[1] < 0.0:
            st[1] = 0.0
        if st[0] >= 0.45:
            terminated[0] = 1
            return 100.0 - 0.1 * u * u
        return -0.1 * u * u
    # pendulum
    u = action[0]
    if u < -2.0:
        u = -2.0
    elif u > 2.0:
        u = 2.0
    th_wrapped = fmod(st[0] + PI, 2.0 * PI)
    if th_wrapped < 0.0:
        th_wrapped += 2.0 * PI
    th_wrapped -= PI
    cost = th_wrapped * th_wrapped + 0.1 * st[1] * st[1] + 0.001 * u * u
    new_th_dot = st[1] + (3.0 * 10.0 / (2.0 * 1.0) * sin(st[0]) + 3.0 / (1.0 * 1.0 * 1.0) * u) * 0.05
    if new_th_dot < -8.0:
        new_th_dot = -8.0
    elif new_th_dot > 8.0:
        new_th_dot = 8.0
    st[0] += new_th_dot * 0.05
    st[1] = new_th_dot
    return -cost

# ---------------------------------------------------------------------------
# fused episode rollout
# ---------------------------------------------------------------------------

cdef int KIND_ITT = 0
cdef int KIND_IOT = 1
cdef int KIND_EXPLICIT = 2


def rollout_episode(int env_id, int max_steps, env_seed, int kind,
                    long[::1] dims1, double[::1] params1,
                    long[::1] dims2, double[::1] params2,
                    int all_linear,
                    double[:, ::1] actions, double[:, ::1] latents,
                    int sample_per_step, int n_samples,
                    double[::1] lo, double[::1] hi,
                    act_key):
    """One full episode; argument conventions as in ``_pykernels``."""
    cdef u64 eseed = <u64>(int(env_seed) & 0xFFFFFFFFFFFFFFFF)
    cdef u64 akey = <u64>(int(act_key) & 0xFFFFFFFFFFFFFFFF)
    cdef int n1 = dims1.shape[0] - 1
    cdef int n2 = dims2.shape[0] - 1 if dims2.shape[0] >= 2 else 0
    cdef bint discrete = env_id == ENV_CARTPOLE or env_id == ENV_MOUNTAINCAR
    cdef bint fixed = actions.shape[0] > 0
    cdef Py_ssize_t n_actions = actions.shape[0]
    cdef Py_ssize_t a_dim = actions.shape[1] if fixed else lo.shape[0]
    cdef Py_ssize_t d_lat = dims2[n2] if n2 > 0 else 0

    # scratch sizing
    cdef long mw = 8
    cdef Py_ssize_t i
    for i in range(dims1.shape[0]):
        if dims1[i] > mw:
            mw = dims1[i]
    for i in range(dims2.shape[0]):
        if dims2[i] > mw:
            mw = dims2[i]
    if a_dim > mw:
        mw = a_dim

    cdef cnp.ndarray sa_arr = np.empty(mw, dtype=np.float64)
    cdef cnp.ndarray sb_arr = np.empty(mw, dtype=np.float64)
    cdef cnp.ndarray out1_arr = np.empty(mw, dtype=np.float64)
    cdef cnp.ndarray out2_arr = np.empty(mw, dtype=np.float64)
    cdef cnp.ndarray act_tmp_arr = np.empty(mw, dtype=np.float64)
    cdef cnp.ndarray best_act_arr = np.empty(mw, dtype=np.float64)
    cdef cnp.ndarray inbuf_arr = np.empty(2 * mw + 8, dtype=np.float64)
    cdef double[::1] sa = sa_arr, sb = sb_arr, out1 = out1_arr, out2 = out2_arr
    cdef double[::1] act_tmp = act_tmp_arr, best_act = best_act_arr, inbuf = inbuf_arr

    # precompute action latents when the set is fixed but latents were not given
    cdef cnp.ndarray lat_arr
    cdef double[:, ::1] lat_view = latents
    if kind == KIND_ITT and fixed and latents.shape[0] == 0:
        lat_arr = np.empty((n_actions, d_lat), dtype=np.float64)
        lat_view = lat_arr
        for i in range(n_actions):
            c_forward(&params2[0], &dims2[0], n2, all_linear, &actions[i, 0],
                      &sa[0], &sb[0], &lat_view[i, 0])

    cdef const double* p1 = &params1[0] if params1.shape[0] > 0 else NULL
    cdef const double* p2 = &params2[0] if params2.shape[0] > 0 else NULL
    cdef const long* dd1 = &dims1[0]
    cdef const long* dd2 = &dims2[0] if dims2.shape[0] > 0 else NULL
    cdef const double* act_rows = &actions[0, 0] if fixed else NULL
    cdef const double* lat_rows = &lat_view[0, 0] if lat_view.shape[0] > 0 else NULL
    cdef const double* lo_p = &lo[0] if lo.shape[0] > 0 else NULL
    cdef const double* hi_p = &hi[0] if hi.shape[0] > 0 else NULL

    cdef double st[4]
    cdef double obs[4]
    cdef int obs_dim = env_obs_dim(env_id)
    cdef double total = 0.0
    cdef int steps = 0
    cdef int terminated = 0
    cdef Py_ssize_t j, c, best_i, n_cand
    cdef double sc, best, reward
    cdef u64 base_ctr
    cdef int out_dim1 = <int>dims1[n1]

    with nogil:
        env_reset(env_id, eseed, st)
        while steps < max_steps:
            env_observe(env_id, st, obs)
            best_i = 0
            if kind == KIND_EXPLICIT:
                c_forward(p1, dd1, n1, all_linear, obs, &sa[0], &sb[0], &out1[0])
                if discrete:
                    best = out1[0]
                    for j in range(1, out_dim1):
                        if out1[j] > best:
                            best = out1[j]
                            best_i = j
                else:
                    for c in range(a_dim):
                        sc = out1[c]
                        if sc < lo_p[c]:
                            sc = lo_p[c]
                        elif sc > hi_p[c]:
                            sc = hi_p[c]
                        best_act[c] = sc
            elif kind == KIND_ITT:
                c_forward(p1, dd1, n1, all_linear, obs, &sa[0], &sb[0], &out1[0])
                if fixed:
                    best = -1e308
                    for j in range(n_actions):
                        sc = 0.0
                        for c in range(d_lat):
                            sc += lat_rows[j * d_lat + c] * out1[c]
                        if sc > best:
                            best = sc
                            best_i = j
                    if not discrete:
                        for c in range(a_dim):
                            best_act[c] = act_rows[best_i * a_dim + c]
                else:
                    base_ctr = <u64>steps * <u64>n_samples * <u64>a_dim
                    best = -1e308
                    for j in range(n_samples):
                        for c in range(a_dim):
                            act_tmp[c] = lo_p[c] + c_u01(akey, base_ctr + <u64>(j * a_dim + c)) * (hi_p[c] - lo_p[c])
                        c_forward(p2, dd2, n2, all_linear, &act_tmp[0], &sa[0], &sb[0], &out2[0])
                        sc = 0.0
                        for c in range(d_lat):
                            sc += out2[c] * out1[c]
                        if sc > best:
                            best = sc
                            best_i = j
                            for c in range(a_dim):
                                best_act[c] = act_tmp[c]
            else:  # KIND_IOT
                n_cand = n_actions if fixed else n_samples
                base_ctr = <u64>steps * <u64>n_samples * <u64>a_dim
                best = 1e308
                for j in range(n_cand):
                    for c in range(obs_dim):
                        inbuf[c] = obs[c]
                    if fixed:
                        for c in range(a_dim):
                            inbuf[obs_dim + c] = act_rows[j * a_dim + c]
                    else:
                        for c in range(a_dim):
                            act_tmp[c] = lo_p[c] + c_u01(akey, base_ctr + <u64>(j * a_dim + c)) * (hi_p[c] - lo_p[c])
                            inbuf[obs_dim + c] = act_tmp[c]
                    c_forward(p1, dd1, n1, all_linear, &inbuf[0], &sa[0], &sb[0], &out1[0])
                    if out1[0] < best:
                        best = out1[0]
                        best_i = j
                        if not discrete:
                            for c in range(a_dim):
                                best_act[c] = inbuf[obs_dim + c]
            reward = env_step(env_id, st,
                              &best_act[0],
                              <int>best_i, &terminated)
            total += reward
            steps += 1
            if terminated:
                break
    return total, steps

# ---------------------------------------------------------------------------
# quadratic-objective Monte Carlo for the ES estimators
# ---------------------------------------------------------------------------

cdef double c_quad_value(const double* g, const double* h, double constant,
                         const double* x, double* hx, Py_ssize_t d) nogil:
    cdef Py_ssize_t i, j
    cdef double acc, val = constant
    for i in range(d):
        acc = 0.0
        for j in range(d):
            acc += h[i * d + j] * x[j]
        hx[i] = acc
    for i in range(d):
        val += g[i] * x[i] + 0.5 * x[i] * hx[i]
    return val


cdef int c_orth_ensemble(u64 tkey, Py_ssize_t m, Py_ssize_t d,
                         double* work, double* q, double* eps) nogil:
    """Orthogonal Gaussian ensemble; returns 0 on success, -1 on failure.

    Attempt a draws base normals at normal indices [a*m*d, (a+1)*m*d); the
    norm-restoring draws follow the successful attempt.
    """
    cdef Py_ssize_t attempt, i, j, k
    cdef double dot, nv, ref, chi, z
    cdef u64 base
    for attempt in range(64):
        base = <u64>(2 * attempt * m * d)
        for i in range(m * d):
            work[i] = c_normal(tkey, base + <u64>(2 * i))
        # modified Gram-Schmidt on rows
        nv = 0.0
        for i in range(m):
            for j in range(d):
                q[i * d + j] = work[i * d + j]
            for k in range(i):
                dot = 0.0
                for j in range(d):
                    dot += q[i * d + j] * q[k * d + j]
                for j in range(d):
                    q[i * d + j] -= dot * q[k * d + j]
            nv = 0.0
            ref = 0.0
            for j in range(d):
                nv += q[i * d + j] * q[i * d + j]
                ref += work[i * d + j] * work[i * d + j]
            nv = sqrt(nv)
            ref = sqrt(ref)
            if nv <= 1e-12 * ref:
                nv = -1.0
                break
            for j in range(d):
                q[i * d + j] /= nv
        if nv < 0.0:
            continue
        base = <u64>(2 * (attempt + 1) * m * d)
        for i in range(m):
            chi = 0.0
            for j in range(d):
                z = c_normal(tkey, base + <u64>(2 * (i * d + j)))
                chi += z * z
            chi = sqrt(chi)
            for j in range(d):
                eps[i * d + j] = q[i * d + j] * chi
        return 0
    return -1


def quad_mc(int kind, double[::1] g, double[:, ::1] hessian, double constant,
            double[::1] theta, double sigma, int m, trials, key):
    """Monte Carlo (MSE, mean estimate) of the AT (0) / FD (1) estimator."""
    cdef Py_ssize_t d = g.shape[0]
    cdef long n_trials = int(trials)
    cdef u64 k0 = <u64>(int(key) & 0xFFFFFFFFFFFFFFFF)
    cdef cnp.ndarray work_arr = np.empty(m * d, dtype=np.float64)
    cdef cnp.ndarray q_arr = np.empty(m * d, dtype=np.float64)
    cdef cnp.ndarray eps_arr = np.empty(m * d, dtype=np.float64)
    cdef cnp.ndarray x_arr = np.empty(d, dtype=np.float64)
    cdef cnp.ndarray hx_arr = np.empty(d, dtype=np.float64)
    cdef cnp.ndarray grad_arr = np.empty(d, dtype=np.float64)
    cdef cnp.ndarray est_arr = np.empty(d, dtype=np.float64)
    cdef cnp.ndarray mean_arr = np.zeros(d, dtype=np.float64)
    cdef double[::1] work = work_arr, qv = q_arr, eps = eps_arr
    cdef double[::1] x = x_arr, hx = hx_arr, grad = grad_arr, est = est_arr, mean = mean_arr
    cdef double acc_mse = 0.0
    cdef double f0, fp, fm, w, err, scale
    cdef Py_ssize_t i, j
    cdef long t
    cdef u64 tkey

    with nogil:
        for i in range(d):
            w = 0.0
            for j in range(d):
                w += hessian[i, j] * theta[j]
            grad[i] = g[i] + w
        f0 = c_quad_value(&g[0], &hessian[0, 0], constant, &theta[0], &hx[0], d)
        for t in range(n_trials):
            tkey = c_derive1(k0, <u64>t)
            if c_orth_ensemble(tkey, m, d, &work[0], &qv[0], &eps[0]) != 0:
                with gil:
                    raise RuntimeError("orthogonal ensemble: resampling failed")
            for i in range(d):
                est[i] = 0.0
            if kind == 0:
                scale = 1.0 / (2.0 * sigma * m)
                for i in range(m):
                    for j in range(d):
                        x[j] = theta[j] + sigma * eps[i * d + j]
                    fp = c_quad_value(&g[0], &hessian[0, 0], constant, &x[0], &hx[0], d)
                    for j in range(d):
                        x[j] = theta[j] - sigma * eps[i * d + j]
                    fm = c_quad_value(&g[0], &hessian[0, 0], constant, &x[0], &hx[0], d)
                    w = fp - fm
                    for j in range(d):
                        est[j] += w * eps[i * d + j]
            else:
                scale = 1.0 / (sigma * m)
                for i in range(m):
                    for j in range(d):
                        x[j] = theta[j] + sigma * eps[i * d + j]
                    fp = c_quad_value(&g[0], &hessian[0, 0], constant, &x[0], &hx[0], d)
                    w = fp - f0
                    for j in range(d):
                        est[j] += w * eps[i * d + j]
            for j in range(d):
                est[j] *= scale
                mean[j] += est[j]
                err = est[j] - grad[j]
                acc_mse += err * err
    return acc_mse / n_trials, mean_arr / n_trials

# ---------------------------------------------------------------------------
# selection kernels
# ---------------------------------------------------------------------------


def itt_argmax(double[:, ::1] latents, double[::1] state_latent):
    cdef Py_ssize_t n = latents.shape[0], d = latents.shape[1]
    cdef Py_ssize_t i, j, best_i = 0
    cdef double sc, best = -1e308
    with nogil:
        for i in range(n):
            sc = 0.0
            for j in range(d):
                sc += latents[i, j] * state_latent[j]
            if sc > best:
                best = sc
                best_i = i
    return int(best_i)


def iot_energies(long[::1] dims, double[::1] params, int all_linear,
                 double[::1] state, double[:, ::1] actions):
    cdef Py_ssize_t n = actions.shape[0]
    cdef Py_ssize_t a_dim = actions.shape[1]
    cdef Py_ssize_t s_dim = state.shape[0]
    cdef int nlayers = dims.shape[0] - 1
    cdef long mw = 8
    cdef Py_ssize_t i, c
    for i in range(dims.shape[0]):
        if dims[i] > mw:
            mw = dims[i]
    cdef cnp.ndarray out_arr = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray sa_arr = np.empty(mw, dtype=np.float64)
    cdef cnp.ndarray sb_arr = np.empty(mw, dtype=np.float64)
    cdef cnp.ndarray o_arr = np.empty(mw, dtype=np.float64)
    cdef cnp.ndarray in_arr = np.empty(s_dim + a_dim, dtype=np.float64)
    cdef double[::1] out = out_arr, sa = sa_arr, sb = sb_arr, o = o_arr, inb = in_arr
    with nogil:
        for i in range(n):
            for c in range(s_dim):
                inb[c] = state[c]
            for c in range(a_dim):
                inb[s_dim + c] = actions[i, c]
            c_forward(&params[0], &dims[0], nlayers, all_linear, &inb[0], &sa[0], &sb[0], &o[0])
            out[i] = o[0]
    return out_arr


def srp_query(cnp.uint64_t[::1] bucket_codes, long[::1] bucket_starts,
              long[::1] bucket_members, double[:, ::1] latents,
              double[::1] state_latent, state_code, budget):
    """Hamming-ordered bucket probe with exact rescoring; see srp.query."""
    cdef u64 scode = <u64>(int(state_code) & 0xFFFFFFFFFFFFFFFF)
    cdef long want = int(budget)
    cdef Py_ssize_t n_buckets = bucket_codes.shape[0]
    cdef Py_ssize_t d = latents.shape[1]
    cdef Py_ssize_t b, t, j
    cdef long idx, count = 0
    cdef long best_idx = -1
    cdef double sc, best = -1e308
    cdef int dist, reached = 0
    with nogil:
        for dist in range(65):
            if reached:
                break
            for b in range(n_buckets):
                if __builtin_popcountll(bucket_codes[b] ^ scode) != dist:
                    continue
                for t in range(bucket_starts[b], bucket_starts[b + 1]):
                    idx = bucket_members[t]
                    sc = 0.0
                    for j in range(d):
                        sc += latents[idx, j] * state_latent[j]
                    if sc > best or (sc == best and idx < best_idx):
                        best = sc
                        best_idx = idx
                    count += 1
                if count >= want:
                    reached = 1
                    break
    return int(best_idx), int(count)
