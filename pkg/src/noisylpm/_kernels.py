"""Compiled inner loops.

Everything here works on plain arrays.  Positions are split into ``zx``/``zy``;
the link enters only through ``beta`` and ``scale`` (logit = beta - scale*d),
so ``log p = logit - softplus(logit)`` and ``log(1 - p) = -softplus(logit)``.

Grid layout: box id ``a * M + c`` for lattice index ``(a, c)``.  Occupancy is
dense over the M*M boxes; the non-empty boxes are also kept in an unordered
list (``ne_list``/``ne_pos``/``n_ne``) so sums can skip empty boxes.  Per-node
edge counts ``xi`` use the CSR slots of the adjacency: node ``i`` owns
``xi_box/xi_cnt[indptr[i]:indptr[i] + xi_len[i]]`` and never stores a zero.
"""

import math
from collections import namedtuple

import numpy as np
from numba import njit, prange

GridArrays = namedtuple(
    "GridArrays",
    ["M", "S", "b", "box_of", "occ", "ne_list", "ne_pos", "n_ne",
     "xi_box", "xi_cnt", "xi_len", "cx", "cy"],
)

_CACHE = True


@njit(cache=_CACHE, inline="always")
def softplus(x):
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@njit(cache=_CACHE, inline="always")
def dist(ax, ay, bx, by):
    dx = ax - bx
    dy = ay - by
    return math.sqrt(dx * dx + dy * dy)


@njit(cache=_CACHE, inline="always")
def beta_scale(kind, psi):
    if kind == 0:
        return psi[0], 1.0
    return psi[0], math.exp(psi[1])


@njit(cache=_CACHE)
def neumaier_sum(values):
    s = 0.0
    c = 0.0
    for v in values:
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    return s + c


@njit(cache=_CACHE)
def seed(value):
    np.random.seed(value)


# ---------------------------------------------------------------------------
# grid

@njit(cache=_CACHE, inline="always")
def lattice_coord(x, S, b, M):
    k = int(math.floor((x + S) / b))
    if k < 0:
        k = 0
    elif k > M - 1:
        k = M - 1
    return k


@njit(cache=_CACHE, inline="always")
def box_id(x, y, S, b, M):
    return lattice_coord(x, S, b, M) * M + lattice_coord(y, S, b, M)


@njit(cache=_CACHE, inline="always")
def _ne_add(box, ne_list, ne_pos, n_ne):
    k = n_ne[0]
    ne_list[k] = box
    ne_pos[box] = k
    n_ne[0] = k + 1


@njit(cache=_CACHE, inline="always")
def _ne_remove(box, ne_list, ne_pos, n_ne):
    k = ne_pos[box]
    last = n_ne[0] - 1
    moved = ne_list[last]
    ne_list[k] = moved
    ne_pos[moved] = k
    ne_pos[box] = -1
    n_ne[0] = last


@njit(cache=_CACHE)
def _xi_inc(j, box, start, xi_box, xi_cnt, xi_len):
    s = start[j]
    n = xi_len[j]
    for t in range(s, s + n):
        if xi_box[t] == box:
            xi_cnt[t] += 1
            return
    xi_box[s + n] = box
    xi_cnt[s + n] = 1
    xi_len[j] = n + 1


@njit(cache=_CACHE)
def _xi_dec(j, box, start, xi_box, xi_cnt, xi_len):
    s = start[j]
    n = xi_len[j]
    for t in range(s, s + n):
        if xi_box[t] == box:
            c = xi_cnt[t] - 1
            if c == 0:
                last = s + n - 1
                xi_box[t] = xi_box[last]
                xi_cnt[t] = xi_cnt[last]
                xi_box[last] = -1
                xi_cnt[last] = 0
                xi_len[j] = n - 1
            else:
                xi_cnt[t] = c
            return
    # missing entry: counts are corrupt
    xi_len[j] = -1


@njit(cache=_CACHE)
def grid_fill(zx, zy, indptr, indices, S, b, M, box_of, occ, ne_list, ne_pos, n_ne,
              xi_box, xi_cnt, xi_len):
    n = zx.shape[0]
    for i in range(n):
        bx = box_id(zx[i], zy[i], S, b, M)
        box_of[i] = bx
        if occ[bx] == 0:
            _ne_add(bx, ne_list, ne_pos, n_ne)
        occ[bx] += 1
    for i in range(n):
        for p in range(indptr[i], indptr[i + 1]):
            _xi_inc(i, box_of[indices[p]], indptr, xi_box, xi_cnt, xi_len)


@njit(cache=_CACHE)
def grid_move(i, new_box, indptr, indices, box_of, occ, ne_list, ne_pos, n_ne,
              xi_box, xi_cnt, xi_len):
    old = box_of[i]
    if old == new_box:
        return
    occ[old] -= 1
    if occ[old] == 0:
        _ne_remove(old, ne_list, ne_pos, n_ne)
    if occ[new_box] == 0:
        _ne_add(new_box, ne_list, ne_pos, n_ne)
    occ[new_box] += 1
    for p in range(indptr[i], indptr[i + 1]):
        j = indices[p]
        _xi_dec(j, old, indptr, xi_box, xi_cnt, xi_len)
        _xi_inc(j, new_box, indptr, xi_box, xi_cnt, xi_len)
    box_of[i] = new_box


# ---------------------------------------------------------------------------
# exact likelihood

@njit(cache=_CACHE)
def _exact_row_upper(i, zx, zy, indptr, indices, beta, scale):
    # sum over j > i of y_ij * logit - softplus(logit), compensated
    n = zx.shape[0]
    s = 0.0
    c = 0.0
    xi_, yi_ = zx[i], zy[i]
    for j in range(i + 1, n):
        v = -softplus(beta - scale * dist(xi_, yi_, zx[j], zy[j]))
        t = s + v
        if abs(s) >= abs(v):
            c += (s - t) + v
        else:
            c += (v - t) + s
        s = t
    for p in range(indptr[i], indptr[i + 1]):
        j = indices[p]
        if j > i:
            v = beta - scale * dist(xi_, yi_, zx[j], zy[j])
            t = s + v
            if abs(s) >= abs(v):
                c += (s - t) + v
            else:
                c += (v - t) + s
            s = t
    return s + c


def _exact_loglik_rows_py(zx, zy, indptr, indices, beta, scale, out):
    for i in prange(zx.shape[0]):
        out[i] = _exact_row_upper(i, zx, zy, indptr, indices, beta, scale)


exact_loglik_rows = njit(cache=_CACHE)(_exact_loglik_rows_py)
exact_loglik_rows_par = njit(cache=_CACHE, parallel=True)(_exact_loglik_rows_py)


@njit(cache=_CACHE)
def _exact_psi_row(i, zx, zy, indptr, indices, b0, s0, b1, s1):
    # row i (j > i) of log L(psi1) - log L(psi0)
    n = zx.shape[0]
    acc = 0.0
    xi_, yi_ = zx[i], zy[i]
    for j in range(i + 1, n):
        d = dist(xi_, yi_, zx[j], zy[j])
        acc -= softplus(b1 - s1 * d) - softplus(b0 - s0 * d)
    db = b1 - b0
    ds = s1 - s0
    for p in range(indptr[i], indptr[i + 1]):
        j = indices[p]
        if j > i:
            acc += db - ds * dist(xi_, yi_, zx[j], zy[j])
    return acc


def _exact_psi_rows_py(zx, zy, indptr, indices, b0, s0, b1, s1, out):
    for i in prange(zx.shape[0]):
        out[i] = _exact_psi_row(i, zx, zy, indptr, indices, b0, s0, b1, s1)


exact_psi_rows = njit(cache=_CACHE)(_exact_psi_rows_py)
exact_psi_rows_par = njit(cache=_CACHE, parallel=True)(_exact_psi_rows_py)


@njit(cache=_CACHE)
def exact_z_logratio(i, nx, ny, zx, zy, indptr, indices, beta, scale):
    """log LR for moving node i to (nx, ny)."""
    n = zx.shape[0]
    ox, oy = zx[i], zy[i]
    acc = 0.0
    for j in range(n):
        if j == i:
            continue
        d1 = dist(nx, ny, zx[j], zy[j])
        d0 = dist(ox, oy, zx[j], zy[j])
        acc -= softplus(beta - scale * d1) - softplus(beta - scale * d0)
    lin = 0.0
    for p in range(indptr[i], indptr[i + 1]):
        j = indices[p]
        lin += dist(nx, ny, zx[j], zy[j]) - dist(ox, oy, zx[j], zy[j])
    return acc - scale * lin


# ---------------------------------------------------------------------------
# noisy likelihood

@njit(cache=_CACHE)
def noisy_own(i, px, py, beta, scale, indptr, box_of, occ, ne_list, n_ne,
              xi_box, xi_cnt, xi_len, cx, cy):
    """Row i of the noisy log-likelihood (unhalved) with node i at (px, py)."""
    s = 0.0
    st = indptr[i]
    for t in range(st, st + xi_len[i]):
        bx = xi_box[t]
        s += xi_cnt[t] * (beta - scale * dist(px, py, cx[bx], cy[bx]))
    own = box_of[i]
    for t in range(n_ne[0]):
        bx = ne_list[t]
        w = occ[bx]
        if bx == own:
            w -= 1
        if w > 0:
            s -= w * softplus(beta - scale * dist(px, py, cx[bx], cy[bx]))
    return s


@njit(cache=_CACHE)
def noisy_own_diff(i, nx, ny, beta, scale, zx, zy, indptr, box_of, occ, ne_list, n_ne,
                   xi_box, xi_cnt, xi_len, cx, cy):
    """own_i(new) - own_i(current) with shared box weights."""
    ox, oy = zx[i], zy[i]
    lin = 0.0
    st = indptr[i]
    for t in range(st, st + xi_len[i]):
        bx = xi_box[t]
        lin += xi_cnt[t] * (dist(nx, ny, cx[bx], cy[bx]) - dist(ox, oy, cx[bx], cy[bx]))
    s = -scale * lin
    own = box_of[i]
    for t in range(n_ne[0]):
        bx = ne_list[t]
        w = occ[bx]
        if bx == own:
            w -= 1
        if w > 0:
            s -= w * (softplus(beta - scale * dist(nx, ny, cx[bx], cy[bx]))
                      - softplus(beta - scale * dist(ox, oy, cx[bx], cy[bx])))
    return s


def _noisy_loglik_rows_py(zx, zy, beta, scale, indptr, box_of, occ, ne_list, n_ne,
                          xi_box, xi_cnt, xi_len, cx, cy, out):
    for i in prange(zx.shape[0]):
        out[i] = noisy_own(i, zx[i], zy[i], beta, scale, indptr, box_of, occ, ne_list, n_ne,
                           xi_box, xi_cnt, xi_len, cx, cy)


noisy_loglik_rows = njit(cache=_CACHE)(_noisy_loglik_rows_py)
noisy_loglik_rows_par = njit(cache=_CACHE, parallel=True)(_noisy_loglik_rows_py)


@njit(cache=_CACHE)
def _noisy_psi_row(i, zx, zy, b0, s0, b1, s1, indptr, box_of, occ, ne_list, n_ne,
                   xi_box, xi_cnt, xi_len, cx, cy):
    px, py = zx[i], zy[i]
    db = b1 - b0
    ds = s1 - s0
    s = 0.0
    st = indptr[i]
    for t in range(st, st + xi_len[i]):
        bx = xi_box[t]
        s += xi_cnt[t] * (db - ds * dist(px, py, cx[bx], cy[bx]))
    own = box_of[i]
    for t in range(n_ne[0]):
        bx = ne_list[t]
        w = occ[bx]
        if bx == own:
            w -= 1
        if w > 0:
            d = dist(px, py, cx[bx], cy[bx])
            s -= w * (softplus(b1 - s1 * d) - softplus(b0 - s0 * d))
    return s


def _noisy_psi_rows_py(zx, zy, b0, s0, b1, s1, indptr, box_of, occ, ne_list, n_ne,
                       xi_box, xi_cnt, xi_len, cx, cy, out):
    for i in prange(zx.shape[0]):
        out[i] = _noisy_psi_row(i, zx, zy, b0, s0, b1, s1, indptr, box_of, occ, ne_list,
                                n_ne, xi_box, xi_cnt, xi_len, cx, cy)


noisy_psi_rows = njit(cache=_CACHE)(_noisy_psi_rows_py)
noisy_psi_rows_par = njit(cache=_CACHE, parallel=True)(_noisy_psi_rows_py)


@njit(cache=_CACHE)
def box_softplus_table(zx, zy, beta, scale, cx, cy, out):
    """out[box] = sum_j softplus(logit(d(z_j, c_box)))."""
    nb = cx.shape[0]
    for bx in range(nb):
        out[bx] = 0.0
    for j in range(zx.shape[0]):
        for bx in range(nb):
            out[bx] += softplus(beta - scale * dist(zx[j], zy[j], cx[bx], cy[bx]))


@njit(cache=_CACHE)
def box_softplus_update(ox, oy, nx, ny, beta, scale, cx, cy, table):
    for bx in range(cx.shape[0]):
        table[bx] += (softplus(beta - scale * dist(nx, ny, cx[bx], cy[bx]))
                      - softplus(beta - scale * dist(ox, oy, cx[bx], cy[bx])))


@njit(cache=_CACHE)
def noisy_z_logratio(i, nx, ny, joint, beta, scale, zx, zy, S, b, M, indptr, indices,
                     box_of, occ, ne_list, n_ne, xi_box, xi_cnt, xi_len, cx, cy, table):
    """Noisy log likelihood ratio for moving node i to (nx, ny).

    ``joint=False``: node i's own row only (product over boxes of its edge and
    non-edge counts).  ``joint=True``: the exact difference of the halved
    noisy log-likelihood, which also includes how every other node sees i's
    box centre; needs ``table`` from :func:`box_softplus_table`.
    """
    own = noisy_own_diff(i, nx, ny, beta, scale, zx, zy, indptr, box_of, occ, ne_list, n_ne,
                         xi_box, xi_cnt, xi_len, cx, cy)
    if not joint:
        return own
    old_box = box_of[i]
    new_box = box_id(nx, ny, S, b, M)
    if new_box == old_box:
        return 0.5 * own
    ax, ay = cx[old_box], cy[old_box]
    bx_, by_ = cx[new_box], cy[new_box]
    lin = 0.0
    for p in range(indptr[i], indptr[i + 1]):
        j = indices[p]
        lin += dist(zx[j], zy[j], bx_, by_) - dist(zx[j], zy[j], ax, ay)
    ox, oy = zx[i], zy[i]
    t_new = table[new_box] - softplus(beta - scale * dist(ox, oy, bx_, by_))
    t_old = table[old_box] - softplus(beta - scale * dist(ox, oy, ax, ay))
    others = -scale * lin - t_new + t_old
    return 0.5 * own + 0.5 * others


# ---------------------------------------------------------------------------
# proposals

@njit(cache=_CACHE)
def phi_cdf_diff(a, b):
    """Phi(b) - Phi(a) for a <= b, computed on the tail that avoids cancellation."""
    if a > 0.0:
        return 0.5 * (math.erfc(a / math.sqrt(2.0)) - math.erfc(b / math.sqrt(2.0)))
    return 0.5 * (math.erfc(-b / math.sqrt(2.0)) - math.erfc(-a / math.sqrt(2.0)))


@njit(cache=_CACHE)
def log_tn_mass(x, std, lo, hi):
    return math.log(phi_cdf_diff((lo - x) / std, (hi - x) / std))


@njit(cache=_CACHE)
def draw_tn(x, std, lo, hi):
    # rejection from the untruncated walk; std is capped by the caller so
    # the acceptance rate stays bounded away from zero
    while True:
        y = x + std * np.random.standard_normal()
        if lo <= y <= hi:
            return y


# ---------------------------------------------------------------------------
# sweeps

@njit(cache=_CACHE)
def _order(n, k, random_scan):
    if random_scan:
        return np.random.permutation(n + k)
    return np.arange(n + k)


@njit(cache=_CACHE)
def exact_sweeps(n_sweeps, store_every, out_start, z_out, psi_out, store_z,
                 zx, zy, psi, kind, indptr, indices,
                 S, gamma, psi_lo, psi_hi, psi_prior_std,
                 std_z, std_psi, free_z, free_psi, random_scan,
                 prop_z, acc_z, prop_psi, acc_psi):
    n = zx.shape[0]
    K = psi.shape[0]
    inv2g2 = 0.5 / (gamma * gamma)
    inv2s2 = 0.5 / (psi_prior_std * psi_prior_std)
    rows = np.empty(n)
    stored = 0
    for sweep in range(n_sweeps):
        order = _order(n, K, random_scan)
        for r in order:
            if r < n:
                i = r
                if not free_z[i]:
                    continue
                v = std_z[i]
                ox, oy = zx[i], zy[i]
                nx = draw_tn(ox, v, -S, S)
                ny = draw_tn(oy, v, -S, S)
                lq = (log_tn_mass(ox, v, -S, S) + log_tn_mass(oy, v, -S, S)
                      - log_tn_mass(nx, v, -S, S) - log_tn_mass(ny, v, -S, S))
                lp = -(nx * nx + ny * ny - ox * ox - oy * oy) * inv2g2
                beta, scale = beta_scale(kind, psi)
                ll = exact_z_logratio(i, nx, ny, zx, zy, indptr, indices, beta, scale)
                la = lq + lp + ll
                prop_z[i] += 1
                if la >= 0.0 or np.random.random() < math.exp(la):
                    zx[i] = nx
                    zy[i] = ny
                    acc_z[i] += 1
            else:
                k = r - n
                if not free_psi[k]:
                    continue
                v = std_psi[k]
                old = psi[k]
                new = draw_tn(old, v, psi_lo[k], psi_hi[k])
                lq = log_tn_mass(old, v, psi_lo[k], psi_hi[k]) - log_tn_mass(new, v, psi_lo[k], psi_hi[k])
                lp = -(new * new - old * old) * inv2s2
                b0, s0 = beta_scale(kind, psi)
                psi[k] = new
                b1, s1 = beta_scale(kind, psi)
                psi[k] = old
                exact_psi_rows(zx, zy, indptr, indices, b0, s0, b1, s1, rows)
                la = lq + lp + neumaier_sum(rows)
                prop_psi[k] += 1
                if la >= 0.0 or np.random.random() < math.exp(la):
                    psi[k] = new
                    acc_psi[k] += 1
        if store_every > 0 and (sweep + 1) % store_every == 0:
            row = out_start + stored
            if store_z:
                for i in range(n):
                    z_out[row, i, 0] = zx[i]
                    z_out[row, i, 1] = zy[i]
            for k in range(K):
                psi_out[row, k] = psi[k]
            stored += 1
    return stored


@njit(cache=_CACHE)
def noisy_sweeps(n_sweeps, store_every, out_start, z_out, psi_out, store_z,
                 zx, zy, psi, kind, indptr, indices,
                 S, gamma, psi_lo, psi_hi, psi_prior_std,
                 std_z, std_psi, free_z, free_psi, random_scan,
                 prop_z, acc_z, prop_psi, acc_psi,
                 joint, M, b, box_of, occ, ne_list, ne_pos, n_ne,
                 xi_box, xi_cnt, xi_len, cx, cy, table):
    n = zx.shape[0]
    K = psi.shape[0]
    inv2g2 = 0.5 / (gamma * gamma)
    inv2s2 = 0.5 / (psi_prior_std * psi_prior_std)
    rows = np.empty(n)
    stored = 0
    if joint:
        b0, s0 = beta_scale(kind, psi)
        box_softplus_table(zx, zy, b0, s0, cx, cy, table)
    for sweep in range(n_sweeps):
        order = _order(n, K, random_scan)
        for r in order:
            if r < n:
                i = r
                if not free_z[i]:
                    continue
                v = std_z[i]
                ox, oy = zx[i], zy[i]
                nx = draw_tn(ox, v, -S, S)
                ny = draw_tn(oy, v, -S, S)
                lq = (log_tn_mass(ox, v, -S, S) + log_tn_mass(oy, v, -S, S)
                      - log_tn_mass(nx, v, -S, S) - log_tn_mass(ny, v, -S, S))
                lp = -(nx * nx + ny * ny - ox * ox - oy * oy) * inv2g2
                beta, scale = beta_scale(kind, psi)
                ll = noisy_z_logratio(i, nx, ny, joint, beta, scale, zx, zy, S, b, M,
                                      indptr, indices, box_of, occ, ne_list, n_ne,
                                      xi_box, xi_cnt, xi_len, cx, cy, table)
                la = lq + lp + ll
                prop_z[i] += 1
                if la >= 0.0 or np.random.random() < math.exp(la):
                    nb = box_id(nx, ny, S, b, M)
                    grid_move(i, nb, indptr, indices, box_of, occ, ne_list, ne_pos, n_ne,
                              xi_box, xi_cnt, xi_len)
                    if joint:
                        box_softplus_update(ox, oy, nx, ny, beta, scale, cx, cy, table)
                    zx[i] = nx
                    zy[i] = ny
                    acc_z[i] += 1
            else:
                k = r - n
                if not free_psi[k]:
                    continue
                v = std_psi[k]
                old = psi[k]
                new = draw_tn(old, v, psi_lo[k], psi_hi[k])
                lq = log_tn_mass(old, v, psi_lo[k], psi_hi[k]) - log_tn_mass(new, v, psi_lo[k], psi_hi[k])
                lp = -(new * new - old * old) * inv2s2
                b0, s0 = beta_scale(kind, psi)
                psi[k] = new
                b1, s1 = beta_scale(kind, psi)
                psi[k] = old
                noisy_psi_rows(zx, zy, b0, s0, b1, s1, indptr, box_of, occ, ne_list, n_ne,
                               xi_box, xi_cnt, xi_len, cx, cy, rows)
                la = lq + lp + 0.5 * neumaier_sum(rows)
                prop_psi[k] += 1
                if la >= 0.0 or np.random.random() < math.exp(la):
                    psi[k] = new
                    acc_psi[k] += 1
                    if joint:
                        box_softplus_table(zx, zy, b1, s1, cx, cy, table)
        if store_every > 0 and (sweep + 1) % store_every == 0:
            row = out_start + stored
            if store_z:
                for i in range(n):
                    z_out[row, i, 0] = zx[i]
                    z_out[row, i, 1] = zy[i]
            for k in range(K):
                psi_out[row, k] = psi[k]
            stored += 1
    return stored
