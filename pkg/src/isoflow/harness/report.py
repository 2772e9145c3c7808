"""Plain-text rendering of a verification report."""

from __future__ import annotations


def _fmt(x, width=12):
    if isinstance(x, float):
        return f"{x:{width}.6g}"
    return f"{x!s:>{width}}"


def render_report(report: dict) -> str:
    claims = report.get("claims", [])
    if not claims:
        return "no claims requested\n"
    headers = ["CLAIM", "ANCHOR", "TARGET", "ESTIMATE", "STDERR", "TOL", "STATUS"]
    rows = []
    for rec in claims:
        rows.append([
            rec["claim_id"],
            rec["paper_anchor"],
            _fmt(rec["target"]).strip(),
            _fmt(rec["estimate"]).strip(),
            _fmt(rec.get("std_error", float("nan"))).strip(),
            _fmt(rec["tolerance"]).strip(),
            "PASS" if rec["pass"] else "FAIL",
        ])
    widths = [max(len(h), *(len(r[i]) for r in rows)) for i, h in enumerate(headers)]
    lines = [
        "  ".join(h.ljust(w) for h, w in zip(headers, widths)),
        "  ".join("-" * w for w in widths),
    ]
    for r in rows:
        lines.append("  ".join(c.ljust(w) for c, w in zip(r, widths)))
    n_fail = sum(1 for rec in claims if not rec["pass"])
    lines.append("")
    lines.append(
        f"{len(claims) - n_fail}/{len(claims)} claims passed"
        + (f" ({n_fail} FAILED)" if n_fail else "")
    )
    return "\n".join(lines) + "\n"
