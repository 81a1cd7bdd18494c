from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

METRICS = ("accuracy", "precision", "recall", "f1")
CSV_HEADER = "method,statistic,average,k," + ",".join(METRICS) + ",flags"


class ReportFormatter:
    def __init__(self):
        self._styles = {
            "csv": self._csv,
            "table": self._table,
        }

    # ===== Structured =====
    @staticmethod
    def to_structured(reports: Iterable[Any]) -> List[Dict[str, Any]]:
        """One row per (report, statistic): fold mean, fold std and pooled."""
        out: List[Dict[str, Any]] = []
        for r in reports:
            for statistic, metrics in (("fold_mean", r.mean), ("fold_std", r.std), ("pooled", r.pooled)):
                out.append(
                    {
                        "method": r.method or "unnamed",
                        "statistic": statistic,
                        "average": r.average.value,
                        "k": r.k,
                        "accuracy": metrics.accuracy,
                        "precision": metrics.precision,
                        "recall": metrics.recall,
                        "f1": metrics.f1,
                        "flags": ";".join(metrics.flags),
                    }
                )
        return out

    # ===== String formatting =====
    def format(self, reports: Iterable[Any], style: str = "csv") -> str:
        if style not in self._styles:
            raise ValueError(f"Unsupported report style: {style}")
        return self._styles[style](self.to_structured(reports))

    @staticmethod
    def _csv(rows: List[Dict[str, Any]]) -> str:
        lines = [CSV_HEADER]
        for r in rows:
            values = ",".join(f"{r[m]:.6f}" for m in METRICS)
            lines.append(f"{r['method']},{r['statistic']},{r['average']},{r['k']},{values},{r['flags']}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def _table(rows: List[Dict[str, Any]]) -> str:
        """Percentages, fold mean ± std next to the pooled value."""
        by_method: Dict[str, Dict[str, Dict[str, Any]]] = {}
        for r in rows:
            by_method.setdefault(r["method"], {})[r["statistic"]] = r
        width = max([len("Methods")] + [len(m) for m in by_method])
        head = f"{'Methods':<{width}}  " + "  ".join(f"{h:>22}" for h in ("Acc (%)", "Prec (%)", "Rec (%)", "F1 (%)"))
        lines = [head, "-" * len(head)]
        for method, stats in by_method.items():
            cells = []
            for m in METRICS:
                mean = 100.0 * stats["fold_mean"][m]
                std = 100.0 * stats["fold_std"][m]
                pooled = 100.0 * stats["pooled"][m]
                cells.append(f"{mean:6.2f} ± {std:5.2f} [{pooled:6.2f}]")
            lines.append(f"{method:<{width}}  " + "  ".join(f"{c:>22}" for c in cells))
        lines.append("")
        lines.append("fold mean ± std, pooled in brackets")
        return "\n".join(lines) + "\n"


def write_report(reports: Sequence[Any], path: Union[str, Path], style: str = "csv") -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(ReportFormatter().format(reports, style), encoding="utf-8")
    return path


def write_history_csv(history: Sequence[float], path: Union[str, Path], column: str = "value") -> Path:
    """step,<column> rows; used for loss curves, fine-tune accuracy and optimizer best-so-far."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"step,{column}"] + [f"{i},{float(v)!r}" for i, v in enumerate(history)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def write_edges_csv(edges: Sequence[Any], path: Union[str, Path], roi_names: Sequence[str] = ()) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    named = len(roi_names) > 0
    lines = ["i,j,roi_i,roi_j,f_stat,p_value" if named else "i,j,f_stat,p_value"]
    for e in edges:
        if named:
            lines.append(f"{e.i},{e.j},{roi_names[e.i]},{roi_names[e.j]},{e.f_stat!r},{e.p_value!r}")
        else:
            lines.append(f"{e.i},{e.j},{e.f_stat!r},{e.p_value!r}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
