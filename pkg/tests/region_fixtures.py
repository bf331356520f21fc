"""Hand-derived admissibility vectors for every region-checker case.

Each entry: (case, params, admissible, violated) where `violated` is the
exact expected list for single-violation vectors, or a subset that must be
contained in the reported list.  All arithmetic was done by hand from the
literal inequalities before the checker was implemented; derivations are
inlined as comments.  Boundary vectors pin the <= vs < distinctions.
"""

HEAT = [
    # n=1, p=q=2: base n(1/p-1/q)=0, n(1-1/p)=0.5, -n/q=-0.5
    # I inside: -0.5 < 0.25 <= 0.25 < 0.5, gamma = 0+(0.25-0.25) = 0
    ("HEAT_I", dict(n=1, p=2, q=2, alpha=0.25, beta=0.25, gamma=0.0), True, []),
    # I outside: alpha = 0.6 >= 0.5; gamma = 0+(0.6-0.1) = 0.5 keeps the equality
    ("HEAT_I", dict(n=1, p=2, q=2, alpha=0.6, beta=0.1, gamma=0.5), False,
     ["alpha_upper"]),
    # I boundary: beta = -n/q exactly is excluded (strict <); gamma = 0.5 = 0-(-0.5)
    ("HEAT_I", dict(n=1, p=2, q=2, alpha=0.0, beta=-0.5, gamma=0.5), False,
     ["beta_lower"]),
    # II inside: -0.5 < -0.25 <= 0 <= 0.25 <= 0.5; 0.25 = -beta <= 0.3 <= 0.5
    ("HEAT_II", dict(n=1, p=2, q=2, alpha=0.25, beta=-0.25, gamma=0.3), True, []),
    # II boundary: alpha = n(1-1/p) = 0.5 is INCLUDED here (<=), unlike case I
    ("HEAT_II", dict(n=1, p=2, q=2, alpha=0.5, beta=0.0, gamma=0.25), True, []),
    # II outside: beta = 0.1 > 0; gamma = 0 stays inside [-0.1, 0.15]
    ("HEAT_II", dict(n=1, p=2, q=2, alpha=0.25, beta=0.1, gamma=0.0), False,
     ["beta_le_zero"]),
    # III inside: -0.5 <= -0.3 <= 0 <= 0.2 < 0.5; 0.2 = 0+alpha <= 0.4 <= 0.5
    ("HEAT_III", dict(n=1, p=2, q=2, alpha=0.2, beta=-0.3, gamma=0.4), True, []),
    # III boundary: beta = -n/q INCLUDED here (<=), unlike case I
    ("HEAT_III", dict(n=1, p=2, q=2, alpha=0.1, beta=-0.5, gamma=0.5), True, []),
    # III outside: gamma = 0.1 < 0+alpha = 0.2
    ("HEAT_III", dict(n=1, p=2, q=2, alpha=0.2, beta=-0.2, gamma=0.1), False,
     ["gamma_lower"]),
    # IV boundary: alpha = beta = n(1-1/p) both included, gamma pinned to [0,0]
    ("HEAT_IV", dict(n=1, p=2, q=2, alpha=0.5, beta=0.5, gamma=0.0), True, []),
    # IV outside: gamma = 0.5 > alpha-beta = 0.4
    ("HEAT_IV", dict(n=1, p=2, q=2, alpha=0.3, beta=-0.1, gamma=0.5), False,
     ["gamma_upper"]),
]

LOCAL = [
    # n=3, p=3, tau=2: tau < min(3, 1+2) = 3 holds
    # I inside: -3 < 0 < 3; (0)(1)-3(1/3) = -1 <= -0.5 <= 0; max(-1,-1) < -0.5
    ("LOCAL_I", dict(n=3, p=3, tau=2, alpha=0, gamma=-0.5), True, []),
    # I outside: gamma = -1.2 breaks both -1 <= gamma and max(-1,-1) < gamma
    ("LOCAL_I", dict(n=3, p=3, tau=2, alpha=0, gamma=-1.2), False,
     ["gamma_lower", "gamma_strict"]),
    # II inside (alpha = 0 branch): 3*2/3-3 = -1 < -0.9 <= 0; -1 < -0.9
    ("LOCAL_II", dict(n=3, p=3, tau=2, alpha=0, gamma=-0.9), True, []),
    # II outside: gamma = 0.1 > 0
    ("LOCAL_II", dict(n=3, p=3, tau=2, alpha=0, gamma=0.1), False,
     ["gamma_upper"]),
    # III inside + lower boundary: (3.9)(2)/3-3 = -0.4 <= -0.4 (inclusive),
    # alpha < min(3(3/2-1), 2*3/1-3) = 1.5, 0 <= (0.9/3)(1) = 0.3
    ("LOCAL_III", dict(n=3, p=3, tau=2, alpha=0.9, gamma=-0.4), True, []),
    # III outside: alpha = 1.5 sits ON the strict upper bound
    ("LOCAL_III", dict(n=3, p=3, tau=2, alpha=1.5, gamma=0.0), False,
     ["alpha_upper"]),
    # IV inside: max(-1, -1) <= -0.5 <= min(2, 0); (3/3)(1)-2 = -1 < -0.5
    ("LOCAL_IV", dict(n=3, p=3, tau=2, alpha=0, gamma=-0.5), True, []),
    # IV boundary: alpha = -n INCLUDED (unlike case I's strict -n <); with
    # alpha = -3: bounds max(-3, -2) = -2 <= -1 <= min(0, -1) = -1, -2 < -1
    ("LOCAL_IV", dict(n=3, p=3, tau=2, alpha=-3, gamma=-1), True, []),
    # IV outside: gamma = 0.2 > min((3/3)*2, 0) = 0
    ("LOCAL_IV", dict(n=3, p=3, tau=2, alpha=0, gamma=0.2), False,
     ["gamma_upper"]),
]

GLOBAL = [
    # n=3, p=3: preamble max(1, 1.5) < 3
    # I inside: 0 <= 0 < min(6, 2*3/1.5-3 = 1); -9 < 0; gamma = (3/3)(1.5)-2 = -0.5
    ("GLOBAL_I", dict(n=3, p=3, tau=2.5, alpha=0), True, []),
    # I outside: alpha = 1.2 >= 1 (and the derived gamma = 0.1 is nonnegative)
    ("GLOBAL_I", dict(n=3, p=3, tau=2.5, alpha=1.2), False, ["alpha_upper"]),
    # II inside: max((3/3)-3, -3(2/3)(1.5)-2) = -2 <= -1 <= (3/3)(1.5)-2 = -0.5;
    # 1+2/3 <= 2.5
    ("GLOBAL_II", dict(n=3, p=3, tau=2.5, alpha=0, gamma=-1), True, []),
    # II boundary: the inverse-square case gamma = -2 sits ON the inclusive
    # lower bound (p(n-2)-n = 0 >= alpha = 0)
    ("GLOBAL_II", dict(n=3, p=3, tau=2.5, alpha=0, gamma=-2), True, []),
    # II outside: gamma = -0.4 > -0.5
    ("GLOBAL_II", dict(n=3, p=3, tau=2.5, alpha=0, gamma=-0.4), False,
     ["gamma_upper"]),
    # III inside: 0 < 1 < 6; 1 <= 2*3-3(1.5) = 1.5; (4/3)-3 = -5/3 <= -1;
    # -1 <= (1/3-2)/1.5 + 1 = -1/9 <= 0; -2 < -1
    ("GLOBAL_III", dict(n=3, p=3, tau=2.5, alpha=1, gamma=-1), True, []),
    # III outside: alpha = 0 fails the strict 0 < alpha
    ("GLOBAL_III", dict(n=3, p=3, tau=2.5, alpha=0, gamma=-1), False,
     ["alpha_lower"]),
    # IV inside (tau = 2.9 so the strict gamma < n/p - 2/(tau-2) = -1.222...
    # leaves room): -2 <= -1.5 <= min(-0.1, 0.222, 0.0526, -0.1) = -0.1
    ("GLOBAL_IV", dict(n=3, p=3, tau=2.9, alpha=0, gamma=-1.5), True, []),
    # IV boundary: gamma = (n+alpha)/p - n = -2 exactly (inclusive lower)
    ("GLOBAL_IV", dict(n=3, p=3, tau=2.9, alpha=0, gamma=-2), True, []),
    # IV outside: gamma = -1 >= -1.222...
    ("GLOBAL_IV", dict(n=3, p=3, tau=2.9, alpha=0, gamma=-1), False,
     ["gamma_strict"]),
]

ALL_VECTORS = HEAT + LOCAL + GLOBAL
