"""Regenerates dist_oracle.csv: F and Student-t upper-tail probabilities by
direct high-precision quadrature of the densities (no incomplete beta)."""
import mpmath as mp

mp.mp.dps = 40


def f_density(d1, d2):
    d1, d2 = mp.mpf(d1), mp.mpf(d2)
    lognorm = (d1 / 2) * mp.log(d1 / d2) - (mp.loggamma(d1 / 2) + mp.loggamma(d2 / 2) - mp.loggamma((d1 + d2) / 2))
    def f(x):
        return mp.exp(lognorm + (d1 / 2 - 1) * mp.log(x) - (d1 + d2) / 2 * mp.log1p(d1 * x / d2))
    return f


def t_density(df):
    v = mp.mpf(df)
    lognorm = mp.loggamma((v + 1) / 2) - mp.loggamma(v / 2) - mp.log(mp.sqrt(v * mp.pi))
    def f(x):
        return mp.exp(lognorm - (v + 1) / 2 * mp.log1p(x * x / v))
    return f


def tail(f, a):
    pts = [a, a + mp.mpf("0.5"), a + 2, a + 8, a + 32, a + 256, mp.inf]
    return mp.quad(f, pts)


rows = []
for d1 in (1, 2, 3, 4):
    for d2 in (5, 30, 120, 997, 19997):
        for stat in ("0.3", "1.0", "2.5", "6.85", "15.0"):
            s = mp.mpf(stat)
            p = tail(f_density(d1, d2), s)
            chk = mp.betainc(mp.mpf(d2) / 2, mp.mpf(d1) / 2, 0, d2 / (d2 + d1 * s), regularized=True)
            assert abs(p - chk) < mp.mpf("1e-25"), (d1, d2, stat, p, chk)
            rows.append(("F", stat, d1, d2, p))
for df in (3, 10, 48, 1000, 19998):
    for stat in ("0.05", "0.2", "0.5", "0.8", "1.0", "1.3", "1.7", "2.0", "2.3", "2.6",
                 "3.0", "3.3", "3.6", "4.0", "4.4", "4.8", "5.2", "5.6", "6.0", "7.0"):
        s = mp.mpf(stat)
        p = 2 * tail(t_density(df), s)
        v = mp.mpf(df)
        chk = mp.betainc(v / 2, mp.mpf("0.5"), 0, v / (v + s * s), regularized=True)
        assert abs(p - chk) < mp.mpf("1e-25"), (df, stat, p, chk)
        rows.append(("t", stat, df, 0, p))

with open("dist_oracle.csv", "w") as out:
    out.write("kind,stat,df1,df2,p\n")
    for kind, stat, a, b, p in rows:
        out.write(f"{kind},{stat},{a},{b},{mp.nstr(p, 25)}\n")
print(len(rows))
