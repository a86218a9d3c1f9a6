from typing import Dict, Optional

from tools.analysis import AnalysisReport, LevelSummary


def _yes(flag: Optional[bool]) -> str:
    return "n/a" if flag is None else "yes" if flag else "no"


def _level_line(lv: LevelSummary) -> str:
    line = f"- level {lv.level} (order {lv.order}): bijective={_yes(lv.bijective)}"
    if lv.cycle_type is not None:
        line += f" cycle type {lv.cycle_type}"
    if lv.witness is not None:
        line += f" collision {tuple(lv.witness)}"
    if lv.pushforward is not None:
        line += " pushforward {" + ", ".join(f"{y}: {w}" for y, w in lv.pushforward.items()) + "}"
    return line


def _section(title: str, items: Dict) -> str:
    body = "".join(f"- {k}: {v}\n" for k, v in items.items())
    return f"\n## {title}\n{body}"


def build_report_text(report: AnalysisReport) -> str:
    levels_txt = "".join(_level_line(lv) + "\n" for lv in report.levels)
    notes_txt = "".join(f"- {n}\n" for n in report.notes)
    first, last = report.levels_checked
    text = f"""# {report.map} on {report.tower}

_depth {report.depth}, levels {first}..{last} checked_

**Measure preserving:** {_yes(report.measure_preserving)}
**Ergodic:** {_yes(report.ergodic)}
**Totally ergodic possible:** {_yes(report.totally_ergodic_possible)}
**Obstruction period:** {report.obstruction_period if report.obstruction_period is not None else "none"}

## Levels
{levels_txt}"""
    if report.witness_level is not None:
        witness = report.witness if report.witness is not None else report.witness_cycle_type
        text += f"\n**Witness:** level {report.witness_level}, {witness}\n"
    if report.product is not None:
        text += _section("Product", report.product)
    if report.isometry is not None:
        text += _section("Isometry", report.isometry)
    if report.cylinders is not None:
        text += _section("Cylinders", report.cylinders)
    if notes_txt:
        text += f"\n### Notes\n{notes_txt}"
    return text

