"""Calibration constants shared by reports, surveys and the acceptance gate.

The underlying estimates only hold up to unspecified implied constants, so
every numeric threshold used to classify or judge a measurement lives here.
Each was fixed once against an oracle run and then frozen.
"""

from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class Calibration:
    # Sigma_I threshold ladder C q, C q^{3/2}, C q^2
    sigma1_mult_q: float = 20.0
    sigma1_mult_q32: float = 10.0
    sigma1_mult_q2: float = 10.0
    # Sigma_II ladder C q^{3/2}, C q^2, C q^3
    sigma2_mult_q32: float = 20.0
    sigma2_mult_q2: float = 10.0
    sigma2_mult_q3: float = 10.0
    # sums of products: |value| <= sop_mult * sqrt(q), diagonals >= sop_diag_frac * q
    sop_mult: float = 10.0
    sop_diag_frac: float = 0.25
    # moment bound sum |Sigma_I|^{2m} <= C (q^{2m+2l} + q^{4m+l})
    moment_const: float = 50.0
    # Parseval window |sum |Kl_r|^2 - q| <= C r^2 sqrt(q)
    parseval_const: float = 5.0
    # purity cap max |K| <= rank + slack
    purity_slack: float = 2.0
    # nu-table and xi/zeta norm-report constant ceiling
    norm_report_ceiling: float = 10.0
    # q^eps in reported right-hand sides
    epsilon: float = 0.1
    # values with |x| below this are treated as exact zeros (exponent -inf)
    zero_tol: float = 1e-9

    def override(self, **kw) -> "Calibration":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT = Calibration()
