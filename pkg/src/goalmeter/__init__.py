"""Goal-level energy metering toolkit.

Samples hardware energy counters, subtracts idle baseline, attributes
energy to a target process and its workflow phases, aggregates across
retries into Energy-per-Successful-Goal (EpG) and the Orchestration
Overhead Index (OOI), and binds every run to a three-hash provenance
record.
"""

__version__ = "0.3.0"

SCHEMA_VERSION = "1"
