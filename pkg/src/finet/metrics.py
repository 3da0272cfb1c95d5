"""Strict, loose-macro, and loose-micro evaluation over type sets.

strict:       fraction of instances whose predicted set equals gold.
loose macro:  per-instance overlap precision/recall, averaged.
loose micro:  overlap counts pooled over all instances, then divided.

All measures operate on sets (the decision rule is applied first).
"""

from dataclasses import dataclass

from .errors import CorpusError


def f1(precision, recall):
    """Harmonic mean, defined as 0 when precision + recall = 0."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass
class PRF:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_pr(cls, precision, recall):
        return cls(precision=precision, recall=recall, f1=f1(precision, recall))

    def as_dict(self):
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass
class EvalReport:
    strict: PRF
    loose_macro: PRF
    loose_micro: PRF
    n: int

    def as_dict(self):
        return {
            "strict": self.strict.as_dict(),
            "loose_macro": self.loose_macro.as_dict(),
            "loose_micro": self.loose_micro.as_dict(),
            "n": self.n,
        }

    def format_table(self):
        """Percent table with two decimals (P / R / F1 per measure)."""
        lines = [f"{'measure':<12} {'P':>8} {'R':>8} {'F1':>8}"]
        for name, prf in (("strict", self.strict),
                          ("loose_macro", self.loose_macro),
                          ("loose_micro", self.loose_micro)):
            lines.append(
                f"{name:<12} {100 * prf.precision:>8.2f} "
                f"{100 * prf.recall:>8.2f} {100 * prf.f1:>8.2f}"
            )
        lines.append(f"instances    {self.n}")
        return "\n".join(lines)


def evaluate(pairs):
    """EvalReport over (predicted set, gold set) pairs."""
    pairs = list(pairs)
    n = len(pairs)
    if n == 0:
        raise CorpusError("cannot evaluate an empty pair list")
    exact = 0
    macro_p = 0.0
    macro_r = 0.0
    overlap_total = 0
    pred_total = 0
    gold_total = 0
    for pred, gold in pairs:
        pred = set(pred)
        gold = set(gold)
        if not gold:
            raise CorpusError("gold type set is empty")
        if not pred:
            raise CorpusError("predicted type set is empty")
        overlap = len(pred & gold)
        exact += pred == gold
        macro_p += overlap / len(pred)
        macro_r += overlap / len(gold)
        overlap_total += overlap
        pred_total += len(pred)
        gold_total += len(gold)
    strict = exact / n
    return EvalReport(
        strict=PRF.from_pr(strict, strict),
        loose_macro=PRF.from_pr(macro_p / n, macro_r / n),
        loose_micro=PRF.from_pr(overlap_total / pred_total,
                                overlap_total / gold_total),
        n=n,
    )


def per_type_counts(pairs):
    """Plumbing: per-type TP/FP/FN counts (not part of the measures)."""
    counts = {}
    for pred, gold in pairs:
        pred = set(pred)
        gold = set(gold)
        for label in pred | gold:
            tp, fp, fn = counts.get(label, (0, 0, 0))
            counts[label] = (
                tp + (label in pred and label in gold),
                fp + (label in pred and label not in gold),
                fn + (label not in pred and label in gold),
            )
    return counts
