"""Three steps of each baseline optimizer on f(w) = (w - 1.5)^2 from w = 0,
evaluated in 50-digit arithmetic. Prints the iterates used as test oracles."""

from mpmath import mp, mpf, sqrt

mp.dps = 50


def grad(w):
    return 2 * (w - mpf("1.5"))


def run(kind, lr, steps=3):
    w = mpf(0)
    lr = mpf(lr)
    s1 = mpf(0)
    s2 = mpf(0)
    out = []
    for t in range(1, steps + 1):
        g = grad(w)
        if kind == "sgd":
            w -= lr * g
        elif kind == "momentum":
            s1 = mpf("0.9") * s1 + g
            w -= lr * s1
        elif kind == "adagrad":
            s1 += g * g
            w -= lr * g / (sqrt(s1) + mpf("1e-8"))
        elif kind == "rmsprop":
            s1 = mpf("0.9") * s1 + mpf("0.1") * g * g
            w -= lr * g / (sqrt(s1) + mpf("1e-8"))
        elif kind == "adadelta":
            rho, eps = mpf("0.95"), mpf("1e-6")
            s1 = rho * s1 + (1 - rho) * g * g
            upd = g * sqrt(s2 + eps) / sqrt(s1 + eps)
            s2 = rho * s2 + (1 - rho) * upd * upd
            w -= lr * upd
        elif kind == "adam":
            b1, b2 = mpf("0.9"), mpf("0.999")
            s1 = b1 * s1 + (1 - b1) * g
            s2 = b2 * s2 + (1 - b2) * g * g
            mh = s1 / (1 - b1**t)
            vh = s2 / (1 - b2**t)
            w -= lr * mh / (sqrt(vh) + mpf("1e-8"))
        out.append(w)
    return out


for kind, lr in [("sgd", "0.1"), ("momentum", "0.1"), ("adagrad", "0.1"),
                 ("rmsprop", "0.1"), ("adadelta", "1.0"), ("adam", "0.1")]:
    print(kind, lr, [mp.nstr(w, 20) for w in run(kind, lr)])
