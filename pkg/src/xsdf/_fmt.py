"""Float formatting for CSV emission: shortest repr that round-trips exactly."""


def ffmt(x) -> str:
    return repr(float(x))
