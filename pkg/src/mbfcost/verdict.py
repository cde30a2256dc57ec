from enum import Enum


class Verdict(str, Enum):
    """Outcome of verifying a proof.  Truthy only for ``ACCEPT``.

    Rejections are ordinary return values, not exceptions; the value is the
    token printed by the CLI.
    """

    ACCEPT = "Accept"
    TOO_LARGE = "TooLarge"
    BAD_ZEROS = "BadZeros"
    EMPTY_PROOF = "EmptyProof"
    MALFORMED = "Malformed"
    BOGUS_INDEX = "BogusIndex"
    OMITTED_INDEX = "OmittedIndex"

    def __bool__(self) -> bool:
        return self is Verdict.ACCEPT

    def __str__(self) -> str:
        return self.value
