#!/usr/bin/env python3
"""Independent oracle for the hand-checkable reference values frozen into
the C++ tests. Everything here is computed from first principles (math
module only) so the C++ implementation cannot leak into the expectations.

Run: python3 gen_reference_values.py
"""
import math


def log2(x):
    return math.log(x) / math.log(2.0)


def dcg(labels, k):
    return sum(y / log2(1 + r) for r, y in enumerate(labels[:k], start=1))


def ndcg(labels, ideal, k):
    i = dcg(sorted(ideal, reverse=True), k)
    return 0.0 if i == 0 else dcg(labels, k) / i


def ap_at_k(binary, k):
    hits = 0
    total = 0.0
    for j, rel in enumerate(binary[:k], start=1):
        if rel:
            hits += 1
            total += hits / j
    return 0.0 if hits == 0 else total / hits


def rho(alpha, beta, h):
    return alpha / math.sqrt(abs(math.cosh(min(beta * h, beta / 2.0 * h))))


def importance(y, y_max):
    return math.log(y * y_max + 1.0) / math.log(y_max**2 + 1.0)


def lam(y_sorted, idcg, pos_d, i):
    """Closed-form NDCG deviation: swap the document at 1-based position
    pos_d into 1-based position i of the ideally sorted list."""
    y_d = y_sorted[pos_d - 1]
    y_pi = y_sorted[i - 1]
    return 1.0 + ((y_d - y_pi) / log2(1 + i) + (y_pi - y_d) / log2(1 + pos_d)) / idcg


def lam_brute(y_sorted, pos_d, i):
    swapped = list(y_sorted)
    swapped[pos_d - 1], swapped[i - 1] = swapped[i - 1], swapped[pos_d - 1]
    return ndcg(swapped, y_sorted, len(y_sorted))


def main():
    print("# metrics")
    print("dcg_201_k3      =", repr(dcg([2, 0, 1], 3)))
    print("idcg_210        =", repr(dcg([2, 1, 0], 3)))
    print("ndcg_201_k3     =", repr(ndcg([2, 0, 1], [2, 0, 1], 3)))
    print("ap_11010_k5     =", repr(ap_at_k([1, 1, 0, 1, 0], 5)))

    print("# gtd")
    idcg = dcg([2, 1, 0], 3)
    print("lambda_d3_i1    =", repr(lam([2, 1, 0], idcg, 3, 1)))
    print("lambda_brute    =", repr(lam_brute([2, 1, 0], 3, 1)))
    print("rho_h_plus1     =", repr(rho(10.0, 2.0, 1.0)))
    print("rho_h_minus1    =", repr(rho(10.0, 2.0, -1.0)))
    print("importance_1_2  =", repr(importance(1, 2)))

    print("# gtd vector for labels (2,1,0), K=2, doc y=2 (position 1)")
    lam_i2 = lam([2, 1, 0], idcg, 1, 2)
    print("lambda_d1_i2    =", repr(lam_i2))
    print("theta_y2        =", repr((importance(2, 2) * rho(10, 2, 0) * 1.0,
                                     importance(2, 2) * rho(10, 2, -1) * lam_i2)))
    print("# gtd vector for doc y=1 (position 2)")
    lam_y1 = [lam([2, 1, 0], idcg, 2, i) for i in (1, 2)]
    print("lambda_d2       =", repr(lam_y1))
    print("theta_y1        =", repr(tuple(importance(1, 2) * rho(10, 2, 2 - i) * lam_y1[i - 1]
                                          for i in (1, 2))))


if __name__ == "__main__":
    main()
