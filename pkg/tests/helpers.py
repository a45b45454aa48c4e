import numpy as np


def linear_world(n, tau=2.0, seed=0, d=3, noise=1.0, confounded=True):
    """y = tau*t + x.w + a + noise with propensity depending on x and a."""
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    a = (rng.random(n) < 0.5).astype(float)
    w = np.linspace(0.5, 1.0, d)
    logit = 0.5 * x[:, 0] + 0.5 * (a - 0.5) if confounded else np.zeros(n)
    e = 1.0 / (1.0 + np.exp(-logit))
    t = (rng.random(n) < e).astype(float)
    y = tau * t + x @ w + a + noise * rng.normal(size=n)
    return x, a, t, y, e


# lines collected by the acceptance suite and echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []
