"""Number and label formatting for the text reports."""


def format_value(val, decimals: int = 10) -> str:
    """Format a real number with a fixed number of decimals."""
    if val is None:
        return "N/A"
    try:
        return f"{float(val):.{decimals}f}"
    except (ValueError, TypeError):
        return "N/A"


def format_residual(val) -> str:
    """Format a residual or deviation in scientific notation."""
    if val is None:
        return "N/A"
    try:
        return f"{float(val):.3e}"
    except (ValueError, TypeError):
        return "N/A"


def format_verdict(passed) -> str:
    if passed is None:
        return "N/A"
    return "PASS" if passed else "FAIL"


def format_sites(sites) -> str:
    """0-based site list as '{0,2}'."""
    return "{" + ",".join(str(int(s)) for s in sites) + "}"


def parse_sites(text: str) -> tuple[int, ...]:
    """Comma-separated 0-based site indices; raises ValueError on bad input."""
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    if not parts:
        raise ValueError(f"no sites in {text!r}")
    return tuple(int(p) for p in parts)
