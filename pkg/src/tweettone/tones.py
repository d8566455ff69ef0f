"""The seven tone classes and conversions between names and 0/1 vectors.

A tone vector is a plain ``tuple`` of seven ints indexed in ``TONES`` order.
"""

TONES = ("confident", "anger", "fear", "joy", "sadness", "analytical", "tentative")
N_TONES = len(TONES)
TONE_INDEX = {name: i for i, name in enumerate(TONES)}

JOY = TONE_INDEX["joy"]
SADNESS = TONE_INDEX["sadness"]

EMPTY = (0,) * N_TONES


class UnknownToneError(ValueError):
    pass


def tone_vector(names):
    """Build a tone vector from an iterable of tone names."""
    bits = [0] * N_TONES
    for name in names:
        try:
            bits[TONE_INDEX[name]] = 1
        except KeyError:
            raise UnknownToneError(f"unknown tone: {name}") from None
    return tuple(bits)


def tone_names(vector):
    return [TONES[i] for i, bit in enumerate(vector) if bit]


def format_tone_list(vector):
    """Semicolon-joined tone names, as written in prediction and tagged CSVs."""
    return ";".join(tone_names(vector))


def parse_tone_list(text):
    text = text.strip()
    return tone_vector(text.split(";")) if text else EMPTY
