# Regenerates epsilon_cdp_grid.json with 60-digit arithmetic. Run from this directory.
import json, random
import mpmath as mp
mp.mp.dps = 60
random.seed(20261019)
def tau(sigma, gamma, n):
    s2 = (mp.mpf(sigma)/mp.mpf(gamma))**2
    return 10*mp.fsum(mp.e**(-2*mp.pi**2*s2*k/(k+1)) for k in range(1, n))
def chat(c, g, d, beta):
    c, g, d = mp.mpf(c), mp.mpf(g), mp.mpf(d)
    loose = (c + g*mp.sqrt(d))**2
    if beta <= 0: return mp.sqrt(loose)
    tight = c*c + g*g*d/4 + mp.sqrt(2*mp.log(1/mp.mpf(beta)))*g*(c + g*mp.sqrt(d)/2)
    return mp.sqrt(min(tight, loose))
rows = []
for i in range(100):
    sens = random.uniform(0.5, 5)
    c = 10**random.uniform(-1, 1)
    g = c*10**random.uniform(-4, -1)
    beta = random.choice([0.0, 1e-9, 1e-6, 1e-3, 0.1, 0.5])
    s = 10**random.uniform(-0.3, 1.7)
    sigma = s*g
    n = random.randint(2, 200)
    d = int(10**random.uniform(0, 6))
    mu = random.choice([0.0, 0.1, 1/6])
    ch = chat(c, g, d, beta); t = tau(sigma, g, n)
    main = mp.mpf(sens)*ch/(mp.sqrt(n)*mp.mpf(sigma))
    eps = min(mp.sqrt(main**2 + 2*t*d), main + t*mp.sqrt(d))
    if mu > 0: eps = eps/(1-mp.mpf(mu))
    rows.append(dict(sensitivity=sens, clip_norm=c, granularity=g, rounding_bias=beta, sigma=sigma,
                     n=n, dimension=d, dishonest_fraction=mu, epsilon=float(eps)))
json.dump(rows, open("epsilon_cdp_grid.json", "w"), indent=1)
