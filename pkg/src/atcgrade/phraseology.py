"""Shared ground-control vocabulary and spoken-form rendering.

Both the synthetic corpus generator and the rule-based baseline parser are
built on this module, so slot values rendered into a transcript parse back
to the identical normalized value. Normalization conventions:

    digits      spoken one per word, "niner" for 9 ("321" <-> "three two one")
    letters     ICAO phonetic alphabet ("a" <-> "alpha")
    runways     two digits plus optional side letter ("02l" <-> "zero two left")
    taxiways    letter plus optional digit per point, space-joined ("a1 b")
    frequencies digit-per-character with "decimal" ("121.85")
    gates       letter plus digits ("a15" <-> "alpha one five")
"""

from __future__ import annotations

PHONETIC_ALPHABET: dict[str, str] = {
    "alpha": "a", "bravo": "b", "charlie": "c", "delta": "d", "echo": "e",
    "foxtrot": "f", "golf": "g", "hotel": "h", "india": "i", "juliett": "j",
    "kilo": "k", "lima": "l", "mike": "m", "november": "n", "oscar": "o",
    "papa": "p", "quebec": "q", "romeo": "r", "sierra": "s", "tango": "t",
    "uniform": "u", "victor": "v", "whiskey": "w", "xray": "x",
    "yankee": "y", "zulu": "z",
}
LETTER_WORDS: dict[str, str] = {v: k for k, v in PHONETIC_ALPHABET.items()}

# "nine" and "niner" both decode to 9; rendering always uses "niner".
DIGIT_WORDS: dict[str, str] = {
    "zero": "0", "one": "1", "two": "2", "three": "3", "four": "4",
    "five": "5", "six": "6", "seven": "7", "eight": "8", "nine": "9",
    "niner": "9",
}
SPOKEN_DIGITS: dict[str, str] = {
    "0": "zero", "1": "one", "2": "two", "3": "three", "4": "four",
    "5": "five", "6": "six", "7": "seven", "8": "eight", "9": "niner",
}

RUNWAY_SIDE_WORDS: dict[str, str] = {"left": "l", "right": "r", "center": "c", "centre": "c"}
SIDE_SPOKEN: dict[str, str] = {"l": "left", "r": "right", "c": "center"}

AIRLINES: tuple[str, ...] = (
    "singapore", "jetstar", "scoot", "qantas", "emirates", "cathay",
    "garuda", "lufthansa",
)
CONTROLLER_UNITS: tuple[str, ...] = ("ground", "tower", "apron", "delivery")
VEHICLES: tuple[str, ...] = ("tow truck", "follow me car", "works vehicle", "fuel truck")
TAXI_QUALIFIERS: tuple[str, ...] = ("expedite", "with caution")
PUSHBACK_QUALIFIERS: tuple[str, ...] = ("facing east", "facing west", "facing north", "facing south")
GREETINGS: tuple[str, ...] = ("good morning", "good afternoon", "good evening", "good day", "hello")
INFORM_PHRASES: tuple[str, ...] = ("fully ready", "on your frequency")
FREQUENCIES: tuple[str, ...] = ("121.85", "121.72", "124.3", "118.6", "119.25", "121.6")


def spell_digits(digits: str) -> str:
    return " ".join(SPOKEN_DIGITS[d] for d in digits)


def spell_letters(letters: str) -> str:
    return " ".join(LETTER_WORDS[c] for c in letters)


def callsign_spoken(value: str) -> str:
    """"singapore 321" -> "singapore three two one"."""
    airline, _, digits = value.partition(" ")
    return f"{airline} {spell_digits(digits)}"


def runway_spoken(designator: str) -> str:
    """"02l" -> "zero two left"; "20" -> "two zero"."""
    side = designator[-1] if designator[-1].isalpha() else ""
    digits = designator[: len(designator) - len(side)]
    parts = [spell_digits(digits)]
    if side:
        parts.append(SIDE_SPOKEN[side])
    return " ".join(parts)


def taxiway_point_spoken(point: str) -> str:
    """"a1" -> "alpha one"; "b" -> "bravo"."""
    letter, digits = point[0], point[1:]
    parts = [LETTER_WORDS[letter]]
    if digits:
        parts.append(spell_digits(digits))
    return " ".join(parts)


def taxiway_route_spoken(value: str) -> str:
    """"a1 b" -> "alpha one bravo"."""
    return " ".join(taxiway_point_spoken(p) for p in value.split())


def boundary_spoken(value: str) -> str:
    """"runway 02l" -> "runway zero two left"; "e1" -> "echo one"."""
    if value.startswith("runway "):
        return "runway " + runway_spoken(value.split(" ", 1)[1])
    return taxiway_point_spoken(value)


def frequency_spoken(value: str) -> str:
    """"121.85" -> "one two one decimal eight five"."""
    whole, _, frac = value.partition(".")
    return f"{spell_digits(whole)} decimal {spell_digits(frac)}"


def gate_spoken(value: str) -> str:
    """"a15" -> "alpha one five"."""
    return taxiway_point_spoken(value)
