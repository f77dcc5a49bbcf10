# Compiled counterparts of _pykernels; keep the arithmetic identical.

cdef inline double _fmin(double a, double b) nogil:
    return a if a < b else b


cdef inline double _fmax(double a, double b) nogil:
    return a if a > b else b


def nesting_pairs(const double[::1] coords, double theta1, double theta2):
    cdef Py_ssize_t n = coords.shape[0] // 4
    cdef Py_ssize_t i, j
    cdef double ox0, oy0, ox1, oy1, sx0, sy0, sx1, sy1
    cdef double area_o, area_s, iw, ih
    cdef list out = []
    for j in range(n):
        ox0 = coords[4 * j]
        oy0 = coords[4 * j + 1]
        ox1 = coords[4 * j + 2]
        oy1 = coords[4 * j + 3]
        area_o = (ox1 - ox0) * (oy1 - oy0)
        if area_o <= 0.0:
            continue
        for i in range(n):
            if i == j:
                continue
            sx0 = coords[4 * i]
            sy0 = coords[4 * i + 1]
            sx1 = coords[4 * i + 2]
            sy1 = coords[4 * i + 3]
            if sx0 <= ox0 and sy0 <= oy0 and ox1 <= sx1 and oy1 <= sy1:
                out.append((i, j))
                continue
            iw = _fmin(sx1, ox1) - _fmax(sx0, ox0)
            ih = _fmin(sy1, oy1) - _fmax(sy0, oy0)
            if iw <= 0.0 or ih <= 0.0:
                continue
            if (iw * ih) / area_o >= theta1:
                area_s = (sx1 - sx0) * (sy1 - sy0)
                if area_s / area_o > theta2:
                    out.append((i, j))
    out.sort()
    return out


def iou_matrix(const double[::1] a, const double[::1] b):
    cdef Py_ssize_t na = a.shape[0] // 4
    cdef Py_ssize_t nb = b.shape[0] // 4
    cdef Py_ssize_t i, j
    cdef double ax0, ay0, ax1, ay1, bx0, by0, bx1, by1
    cdef double area_a, area_b, iw, ih, inter
    cdef list out = [0.0] * (na * nb)
    for i in range(na):
        ax0 = a[4 * i]
        ay0 = a[4 * i + 1]
        ax1 = a[4 * i + 2]
        ay1 = a[4 * i + 3]
        area_a = (ax1 - ax0) * (ay1 - ay0)
        for j in range(nb):
            bx0 = b[4 * j]
            by0 = b[4 * j + 1]
            bx1 = b[4 * j + 2]
            by1 = b[4 * j + 3]
            area_b = (bx1 - bx0) * (by1 - by0)
            if area_a <= 0.0 and area_b <= 0.0:
                continue
            iw = _fmin(ax1, bx1) - _fmax(ax0, bx0)
            ih = _fmin(ay1, by1) - _fmax(ay0, by0)
            if iw <= 0.0 or ih <= 0.0:
                continue
            inter = iw * ih
            out[i * nb + j] = inter / (area_a + area_b - inter)
    return out
