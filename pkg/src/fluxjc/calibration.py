"""Per-transition calibration data: frequency, Rabi rate and pi-pulse width.

The default table mirrors the device calibration of the alternating JC
sideband chain.  Extra rows (e.g. branch-preserving transitions needed by
configured J_x chains) can be appended; missing frequencies fall back to the
ideal JC values.
"""

from dataclasses import dataclass
from typing import Iterable, Optional

from .hilbert import DressedLabel, dressed_energy_mhz, transition_frequency_mhz


class MissingCalibrationError(KeyError):
    pass


@dataclass(frozen=True)
class Transition:
    lower: DressedLabel
    upper: DressedLabel

    def __post_init__(self):
        if self.upper.n != self.lower.n + 1:
            raise ValueError("transition must connect adjacent excitation manifolds")

    @classmethod
    def parse(cls, text: str) -> "Transition":
        lo, hi = text.replace("<->", ":").split(":")
        return cls(DressedLabel.parse(lo), DressedLabel.parse(hi))

    def __str__(self):
        return f"{self.lower}:{self.upper}"


def transition(lower: str, upper: str) -> Transition:
    return Transition(DressedLabel.parse(lower), DressedLabel.parse(upper))


@dataclass(frozen=True)
class CalibrationRow:
    trans: Transition
    freq_ghz: float
    rabi_mhz: float
    sigma_ns: Optional[float] = None

    def __post_init__(self):
        if not (6.7 <= self.freq_ghz <= 7.0):
            raise ValueError(f"frequency {self.freq_ghz} GHz outside sanity window [6.7, 7.0]")
        if self.rabi_mhz <= 0:
            raise ValueError("Rabi rate must be positive")
        if self.sigma_ns is not None and self.sigma_ns <= 0:
            raise ValueError("sigma must be positive when present")


_TABLE_S2 = [
    ("0", "1+", 6.8809, 29.0, 68.0),
    ("0", "1-", 6.8566, 25.5, 52.0),
    ("1-", "2+", 6.8987, 22.3, 44.0),
    ("1+", "2-", 6.8402, 18.9, 48.0),
    ("2-", "3+", 6.9074, 24.1, 44.0),
    ("2+", "3-", 6.8315, 19.4, 32.0),
    ("3-", "4+", 6.9142, 25.9, 44.0),
    ("3+", "4-", 6.8246, 22.0, 24.0),
    ("4-", "5+", 6.9201, 25.5, 32.0),
    ("5+", "6-", 6.8143, 22.7, None),
    ("6-", "7+", 6.9291, 24.5, None),
]

# Fallback pi-pulse widths for transitions the device table leaves unoptimized.
_DEFAULT_SIGMA_NS = 44.0


class CalibrationTable:
    """Lookup of calibrated transitions, keyed by (lower, upper) dressed labels."""

    def __init__(self, rows: Iterable[CalibrationRow]):
        self._rows = {}
        for row in rows:
            self._rows[row.trans] = row

    @classmethod
    def device_default(cls) -> "CalibrationTable":
        return cls(
            CalibrationRow(transition(lo, hi), f, om, s) for lo, hi, f, om, s in _TABLE_S2
        )

    @classmethod
    def from_ideal(cls, g_mhz: float, omega_cav_ghz: float, max_n: int = 7,
                   sigma_ns: float = _DEFAULT_SIGMA_NS) -> "CalibrationTable":
        """Alternating-sideband table with exact JC frequencies and uniform widths."""
        sigmas = {lo: s for lo, hi, f, om, s in _TABLE_S2}
        rows = []
        for lo, hi, _f, om, _s in _TABLE_S2:
            tr = transition(lo, hi)
            if tr.upper.n > max_n:
                continue
            f = omega_cav_ghz + 1e-3 * transition_frequency_mhz(tr.lower, tr.upper, g_mhz)
            rows.append(CalibrationRow(tr, f, om, sigmas.get(lo) or sigma_ns))
        return cls(rows)

    def rows(self):
        return list(self._rows.values())

    def __contains__(self, trans: Transition) -> bool:
        return trans in self._rows

    def get(self, trans: Transition) -> CalibrationRow:
        try:
            return self._rows[trans]
        except KeyError:
            raise MissingCalibrationError(f"no calibration for transition {trans}") from None

    def detuning_mhz(self, trans: Transition, omega_cav_ghz: float) -> float:
        """Drive detuning relative to the cavity rotating frame, in MHz."""
        return (self.get(trans).freq_ghz - omega_cav_ghz) * 1e3

    def with_row(self, row: CalibrationRow) -> "CalibrationTable":
        rows = dict(self._rows)
        rows[row.trans] = row
        return CalibrationTable(rows.values())

    def with_ideal_transition(self, trans: Transition, g_mhz: float, omega_cav_ghz: float,
                              rabi_mhz: float = 20.0, sigma_ns: float = _DEFAULT_SIGMA_NS
                              ) -> "CalibrationTable":
        """Append a transition at its ideal JC frequency (e.g. a branch-preserving link)."""
        f = omega_cav_ghz + 1e-3 * transition_frequency_mhz(trans.lower, trans.upper, g_mhz)
        return self.with_row(CalibrationRow(trans, f, rabi_mhz, sigma_ns))

    def with_implied_transition(self, trans: Transition, g_mhz: float,
                                rabi_mhz: float = 20.0,
                                sigma_ns: float = _DEFAULT_SIGMA_NS
                                ) -> "CalibrationTable":
        """Append a transition at the frequency the table's own level energies
        imply (resonant with the calibrated Hamiltonian); ideal JC energies
        fill levels the table does not constrain."""
        energies = self.dressed_energies_mhz(g_mhz, max_n=max(trans.upper.n, 8))
        f = self._frame_ghz + 1e-3 * (energies[trans.upper] - energies[trans.lower])
        return self.with_row(CalibrationRow(trans, f, rabi_mhz, sigma_ns))

    def dressed_energies_mhz(self, g_mhz: float, max_n: int = 8) -> dict:
        """Dressed-level frequencies (MHz, rotating frame) implied by the table.

        Energies are propagated from the ground state through calibrated
        transitions; levels the table cannot reach keep their ideal +-sqrt(N) g
        values.
        """
        energies = {DressedLabel(0, 0): 0.0}
        # iterate until no more rows can be attached
        pending = list(self._rows.values())
        progress = True
        while progress:
            progress = False
            remaining = []
            for row in pending:
                lo, hi = row.trans.lower, row.trans.upper
                if lo in energies and hi not in energies:
                    energies[hi] = energies[lo] + self._relative_mhz(row)
                    progress = True
                elif hi in energies and lo not in energies:
                    energies[lo] = energies[hi] - self._relative_mhz(row)
                    progress = True
                else:
                    remaining.append(row)
            pending = remaining
        for n in range(1, max_n + 1):
            for sign in (+1, -1):
                lbl = DressedLabel(n, sign)
                energies.setdefault(lbl, dressed_energy_mhz(lbl, g_mhz))
        return energies

    def _relative_mhz(self, row: CalibrationRow) -> float:
        # set when the table is built against a frame; default device frame
        return (row.freq_ghz - self._frame_ghz) * 1e3

    _frame_ghz = 6.868

    def with_frame(self, omega_cav_ghz: float) -> "CalibrationTable":
        table = CalibrationTable(self._rows.values())
        table._frame_ghz = omega_cav_ghz
        return table

    # -- text round-trip (same columns as the published calibration table) --

    def to_text(self) -> str:
        lines = ["# transition  freq_GHz  rabi_MHz  sigma_ns"]
        for row in self._rows.values():
            s = "-" if row.sigma_ns is None else f"{row.sigma_ns:g}"
            lines.append(f"{row.trans}  {row.freq_ghz:.4f}  {row.rabi_mhz:g}  {s}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CalibrationTable":
        rows = []
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            trans_s, f, om, s = line.split()
            rows.append(
                CalibrationRow(
                    Transition.parse(trans_s), float(f), float(om),
                    None if s == "-" else float(s),
                )
            )
        return cls(rows)
