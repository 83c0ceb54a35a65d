#!/usr/bin/env python3
"""Rebuild summary.csv from the chain CSVs of one run and compare.

Reads only the files on disk. Every statistic is recomputed here with plain loops,
in the same summation order as the C++ harness, so agreement is expected to ~1e-15.
"""

import argparse
import csv
import glob
import math
import os
import statistics
import sys

NAN = float("nan")


def read_chain(path):
    meta, rows = {}, []
    with open(path) as fh:
        lines = fh.readlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition(": ")
            meta[key] = val
        else:
            body.append(line)
    reader = csv.DictReader(body)
    cols = {k: [] for k in ("beta_H", "mag", "q", "accept", "t0_ms", "trunc_err")}
    for row in reader:
        for k in cols:
            cols[k].append(float(row[k]))
    return meta, cols


def read_summary(path):
    meta, body = {}, []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition(": ")
                meta[key] = val
            else:
                body.append(line)
    rows = []
    for r in csv.DictReader(body):
        rows.append(
            {
                "L": int(r["L"]),
                "beta": float(r["beta"]),
                "observable": r["observable"],
                "value": float(r["value"]),
                "ci_lo": float(r["ci_lo"]),
                "ci_hi": float(r["ci_hi"]),
                "tau": float(r["tau"]),
            }
        )
    return meta, rows


def mean(x):
    s = 0.0
    for v in x:
        s += v
    return s / len(x)


def pop_var(x):
    m = mean(x)
    s = 0.0
    for v in x:
        s += (v - m) * (v - m)
    return s / len(x)


def sample_var(x):
    return pop_var(x) * len(x) / (len(x) - 1)


def autocorr(x, lag):
    m = mean(x)
    c0 = 0.0
    for v in x:
        c0 += (v - m) * (v - m)
    ck = 0.0
    for i in range(len(x) - lag):
        ck += (x[i] - m) * (x[i + lag] - m)
    if c0 == 0.0:
        return 0.0
    return ck / c0


def tau_int(x):
    if pop_var(x) == 0.0:
        return 1.0
    s = 0.0
    for k in range(1, len(x)):
        rho = autocorr(x, k)
        if rho < 0.0:
            break
        s += rho
    return 1.0 + 2.0 * s


def mean_tau(ens):
    if not ens or len(ens[0]) < 10:
        return NAN
    t = 0.0
    for s in ens:
        t += tau_int(s)
    return t / len(ens)


def ci(ens, alpha):
    if len(ens) < 2 or len(ens[0]) < 2:
        return NAN, NAN
    n, m = len(ens), len(ens[0])
    grand, var = 0.0, 0.0
    for s in ens:
        acc = 0.0
        for v in s:
            acc += v
        grand += acc
        sv = sample_var(s)
        if sv == 0.0:
            continue
        rho = autocorr(s, 1)
        if rho >= 1.0:
            return NAN, NAN
        var += sv / m * (1.0 + rho) / (1.0 - rho)
    mu = grand / (n * m)
    sigma = math.sqrt(var) / n
    z = statistics.NormalDist().inv_cdf(1.0 - alpha / 2.0)
    return mu - z * sigma, mu + z * sigma


def moments(q):
    m2, m4 = 0.0, 0.0
    for v in q:
        m2 += v * v
        m4 += v * v * v * v
    return m2 / len(q), m4 / len(q)


def binder(ens):
    g = 0.0
    for q in ens:
        m2, m4 = moments(q)
        g += 0.5 * (3.0 - m4 / (m2 * m2))
    return g / len(ens)


def lin_binder(q):
    m2, m4 = moments(q)
    g = 0.5 * (3.0 - m4 / (m2 * m2))
    out = []
    for v in q:
        v2 = v * v
        v4 = v2 * v2
        out.append(g - 0.5 * ((v4 - m4) / (m2 * m2) - 2.0 * m4 * (v2 - m2) / (m2 * m2 * m2)))
    return out


def grand_mean(ens):
    s, c = 0.0, 0
    for x in ens:
        for v in x:
            s += v
            c += 1
    return s / c


def median(v):
    v = sorted(v)
    if not v:
        return NAN
    m = len(v) // 2
    return v[m] if len(v) % 2 else 0.5 * (v[m - 1] + v[m])


def summarize(chains, L, n_sites, beta, n_rep, alpha, eta):
    N = float(n_sites)
    rows = []

    def add(name, value, series, tau):
        lo, hi = ci(series, alpha) if series is not None else (NAN, NAN)
        rows.append((name, value, lo, hi, tau))

    e_site, e_raw, c_lin, absm, m2, g_lin, acc, t0 = [], [], [], [], [], [], [], []
    m_ok = True
    for c in chains:
        e_site.append([v / N for v in c["beta_H"]])
        e_raw.append(c["beta_H"])
        em = mean(c["beta_H"])
        c_lin.append([(v - em) * (v - em) / n_sites for v in c["beta_H"]])
        absm.append([abs(v) for v in c["mag"]])
        m2.append([N * v * v for v in c["mag"]])
        acc.append(c["accept"])
        if moments(c["mag"])[0] > 0.0:
            g_lin.append(lin_binder(c["mag"]))
        else:
            m_ok = False
        t0.extend(c["t0_ms"])
    tau_e = mean_tau(e_raw)
    add("energy", grand_mean(e_site), e_site, tau_e)
    if len(e_raw[0]) >= 2:
        ce = 0.0
        for s in e_raw:
            ce += pop_var(s) / n_sites
        ce /= len(e_raw)
    else:
        ce = NAN
    add("c_e", ce, c_lin, tau_e)
    add("mag_abs", grand_mean(absm), absm, mean_tau(absm))
    tau_m2 = mean_tau(m2)
    add("g_m", binder([c["mag"] for c in chains]) if m_ok else NAN, g_lin if m_ok else None, tau_m2)
    chi_m = grand_mean(m2)
    add("chi_m", chi_m, m2, tau_m2)
    pairs = n_rep // 2
    q2s = []
    chi_q = NAN
    if pairs > 0:
        qs, gq_lin, q_ok = [], [], True
        for c in chains:
            r = c["replica"]
            if r % 2 != 0 or r + 1 >= n_rep:
                continue
            if r == 0:
                qs.append([])
            qs[-1].extend(c["q"])
        for q in qs:
            q2s.append([N * v * v for v in q])
            if moments(q)[0] > 0.0:
                gq_lin.append(lin_binder(q))
            else:
                q_ok = False
        tau_q2 = mean_tau(q2s)
        add("g_q", binder(qs) if q_ok else NAN, gq_lin if q_ok else None, tau_q2)
        chi_q = grand_mean(q2s)
        add("chi_q", chi_q, q2s, tau_q2)
    Lf = float(L)
    add("x_rescaled", beta - 0.5 * math.log(Lf), None, NAN)
    f = math.pow(Lf, -(2.0 - eta))

    def rescaled(name, value, series):
        lo, hi = ci(series, alpha)
        rows.append((name, value * math.pow(Lf, -(2.0 - eta)), lo * f, hi * f, NAN))

    rescaled("chi_m_rescaled", chi_m, m2)
    if pairs > 0:
        rescaled("chi_q_rescaled", chi_q, q2s)
    add("acceptance", grand_mean(acc), acc, NAN)
    t0m = median(t0)
    add("t0_ms", t0m, None, NAN)
    add("tau_energy", tau_e, None, tau_e)
    add("t0_tau_ms", t0m * tau_e, None, tau_e)
    return rows


def close(a, b, tol):
    if math.isnan(a) or math.isnan(b):
        return math.isnan(a) and math.isnan(b)
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("run_dir")
    ap.add_argument("--check", action="store_true", help="exit non-zero on any mismatch")
    ap.add_argument("--tol", type=float, default=1e-12)
    args = ap.parse_args()

    smeta, srows = read_summary(os.path.join(args.run_dir, "summary.csv"))
    alpha, eta = float(smeta["alpha"]), float(smeta["eta"])
    groups = {}
    n_sites = n_rep = L = None
    for path in glob.glob(os.path.join(args.run_dir, "chain_*.csv")):
        meta, cols = read_chain(path)
        n_sites = int(meta["n_sites"])
        n_rep = int(meta["n_replicas"])
        L = int(meta["model"].split("L=")[1].split()[0])
        cols["replica"] = int(meta["replica"])
        cols["realization"] = int(meta["realization"])
        bi = int(meta["beta_index"])
        groups.setdefault(bi, {"beta": float(meta["beta"]), "chains": []})["chains"].append(cols)
    if not groups:
        print("no chain files in " + args.run_dir, file=sys.stderr)
        return 2

    mine = []
    for bi in sorted(groups):
        g = groups[bi]
        chains = sorted(g["chains"], key=lambda c: (c["realization"], c["replica"]))
        for name, value, lo, hi, tau in summarize(chains, L, n_sites, g["beta"], n_rep, alpha, eta):
            mine.append({"L": L, "beta": g["beta"], "observable": name, "value": value, "ci_lo": lo, "ci_hi": hi, "tau": tau})

    bad = 0
    if len(mine) != len(srows):
        print("row count differs: %d recomputed, %d in summary" % (len(mine), len(srows)))
        bad += 1
    worst = 0.0
    for a, b in zip(mine, srows):
        if a["observable"] != b["observable"] or a["L"] != b["L"] or a["beta"] != b["beta"]:
            print("row key differs: %s vs %s" % (a["observable"], b["observable"]))
            bad += 1
            continue
        for k in ("value", "ci_lo", "ci_hi", "tau"):
            if not close(a[k], b[k], args.tol):
                print("%s beta=%g %s: recomputed %r, summary %r" % (a["observable"], a["beta"], k, a[k], b[k]))
                bad += 1
            elif not math.isnan(a[k]):
                worst = max(worst, abs(a[k] - b[k]) / max(1.0, abs(a[k])))
    print("%d rows compared, %d mismatches, max relative difference %.3g" % (len(srows), bad, worst))
    return 1 if (bad and args.check) else 0


if __name__ == "__main__":
    sys.exit(main())
