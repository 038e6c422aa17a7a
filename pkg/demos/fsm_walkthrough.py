"""Walk the decompressor state machine through the scenarios that matter.

The receiver tracks header context as a chain of W full-context levels, a
repair level, and a no-context level.  This script narrates four short
journeys: establishing context from scratch, sliding down the full-context
levels under transmission failures, getting stuck by over-compression, and
recovering via the repair level.
"""

from bdrohc.core import DecompressorState, HeaderType, decompressor_step, is_decode_success

W = 5


def narrate(title, start, steps):
    print(f"\n{title}")
    state = start
    print(f"  start: {describe(state)}")
    for header, tx_ok, compressible in steps:
        state = decompressor_step(state, header, tx_ok, compressible)
        outcome = "decoded" if is_decode_success(state) else "lost"
        print(
            f"  send {header.name:3s} tx={'ok ' if tx_ok else 'drop'} "
            f"compressible={compressible} -> {describe(state)} ({outcome})"
        )
    return state


def describe(state):
    if state.value <= state.w - 1:
        return f"full context, level {state.value}"
    if state.value == state.w:
        return "repair context"
    return "no context"


print(f"W = {W}: states 0..{W-1} full context, {W} repair, {W+1} no context")

narrate(
    "Cold start: only a full header can establish context",
    DecompressorState.no_context(W),
    [
        (HeaderType.CO3, True, 1),   # minimal header is useless without context
        (HeaderType.CO7, True, 1),   # so is the mid-size one
        (HeaderType.IR, False, 1),   # full header lost in transit
        (HeaderType.IR, True, 1),    # finally lands
        (HeaderType.CO3, True, 1),   # now the 1-bit header decodes fine
    ],
)

narrate(
    "Failure climb: each drop burns one full-context level",
    DecompressorState(0, W),
    [
        (HeaderType.CO3, False, 1),
        (HeaderType.CO3, False, 1),
        (HeaderType.CO3, False, 1),
        (HeaderType.CO3, True, 1),   # a single success resets to level 0
    ],
)

narrate(
    "Over-compression: an incompressible packet under a minimal header",
    DecompressorState(0, W),
    [
        (HeaderType.CO3, True, 0),   # delivered but undecodable -> repair
        (HeaderType.CO3, True, 1),   # minimal header cannot repair
        (HeaderType.CO7, True, 1),   # the 7-bit-CRC header can
        (HeaderType.CO3, True, 1),
    ],
)

state = narrate(
    "Climbing all the way down ends in repair, not no-context",
    DecompressorState(W - 2, W),
    [
        (HeaderType.CO3, False, 1),
        (HeaderType.CO3, False, 1),
        (HeaderType.CO7, True, 1),
    ],
)
assert is_decode_success(state)
print("\nno-context is entered only at reset; losses alone never return there")
