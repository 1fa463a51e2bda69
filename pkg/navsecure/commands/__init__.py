from argparse import Namespace
from typing import Iterable, Optional, Set

from simple_parsing import DashVariant

# Every command accepts both --freeze_multiplier and --freeze-multiplier. Abbreviated flags are refused so that
# supplied_options sees every flag under its full name.
PARSER_OPTIONS = {"add_option_string_dash_variants": DashVariant.UNDERSCORE_AND_DASH, "allow_abbrev": False}


def supplied_options(argv: Iterable[str]) -> Set[str]:
    """
    Names of the options written out on the command line, as field names: '--agent.freeze-multiplier=1' gives
    'freeze_multiplier'.
    """
    options = set()
    for token in argv:
        if token.startswith("--") and len(token) > 2:
            options.add(token[2:].split("=", 1)[0].rsplit(".", 1)[-1].replace("-", "_"))
    return options


def explicit_options(args: Namespace) -> Optional[Set[str]]:
    """
    The options supplied on the command line, or None when the arguments didn't come from a command line.
    """
    return getattr(args, "explicit", None)
