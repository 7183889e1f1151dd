"""Deterministic automatic-increase market ledger.

A token whose price is a fixed, strictly increasing function of time; coins
are minted against stablecoin deposits at the current price and destroyed by
burn activities.  See the README for the CLI and file formats.
"""

from .analytics import ValuationReport, burn_target, net_profit, total_locked_value, valuation_report
from .errors import (
    ActionFailed,
    AimsError,
    DecimalPrecisionError,
    InsufficientBalance,
    InvariantViolation,
    MalformedLog,
    NegativeDeposit,
    NonMonotoneTimestamp,
    SchemaError,
    TimeBeforeStart,
)
from .fixed import FixedDecimal
from .ledger import (
    Activity,
    Burn,
    Event,
    LedgerState,
    Lot,
    Mint,
    ParticipantId,
    Transfer,
    burn,
    genesis,
    mint,
    replay,
    transfer,
)
from .pricing import LinearPriceFunction, PriceFunction, daily_ratio, make_wish_function, price_at
from .scenario import Scenario, TimeSeries, parse_scenario, run
from .timestamps import format_timestamp, parse_timestamp

__version__ = "0.1.0"
