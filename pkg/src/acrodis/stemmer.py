"""French suffix-stripping stemmer (Snowball-family rules).

Self-contained port of the standard French Snowball algorithm so the
package carries no third-party NLP dependency. A single Snowball pass is
not idempotent (e.g. "canalisation" -> "canalis" -> "canal"), so stem()
iterates the pass to a fixpoint; every changing pass strictly reduces
(length, accent count), so the iteration terminates. Golden word/stem
pairs are frozen under tests/fixtures/ and were generated with a
reference implementation of the same rule set, iterated the same way.
"""

from __future__ import annotations

VOWELS = "aeiouy\xe2\xe0\xeb\xe9\xea\xe8\xef\xee\xf4\xfb\xf9"

_STEP1_SUFFIXES = (
    "issements", "issement", "atrices", "atrice", "ateurs", "ations",
    "logies", "usions", "utions", "ements", "amment", "emment", "ances",
    "iqUes", "ismes", "ables", "istes", "ateur", "ation", "logie", "usion",
    "ution", "ences", "ement", "euses", "ments", "ance", "iqUe", "isme",
    "able", "iste", "ence", "it\xe9s", "ives", "eaux", "euse", "ment",
    "eux", "it\xe9", "ive", "ifs", "aux", "if",
)

_STEP2A_SUFFIXES = (
    "issaIent", "issantes", "iraIent", "issante", "issants", "issions",
    "irions", "issais", "issait", "issant", "issent", "issiez", "issons",
    "irais", "irait", "irent", "iriez", "irons", "iront", "isses", "issez",
    "\xeemes", "\xeetes", "irai", "iras", "irez", "isse", "ies", "ira",
    "\xeet", "ie", "ir", "is", "it", "i",
)

_STEP2B_SUFFIXES = (
    "eraIent", "assions", "erions", "assent", "assiez", "\xe8rent",
    "erais", "erait", "eriez", "erons", "eront", "aIent", "antes", "asses",
    "ions", "erai", "eras", "erez", "\xe2mes", "\xe2tes", "ante", "ants",
    "asse", "\xe9es", "era", "iez", "ais", "ait", "ant", "\xe9e", "\xe9s",
    "er", "ez", "\xe2t", "ai", "as", "\xe9", "a",
)

_STEP2B_E_GROUP = frozenset((
    "eraIent", "erions", "\xe8rent", "erais", "erait", "eriez", "erons",
    "eront", "erai", "eras", "erez", "\xe9es", "era", "iez", "\xe9e",
    "\xe9s", "er", "ez", "\xe9",
))

_STEP2B_A_GROUP = frozenset((
    "assions", "assent", "assiez", "aIent", "antes", "asses", "\xe2mes",
    "\xe2tes", "ante", "ants", "asse", "ais", "ait", "ant", "\xe2t", "ai",
    "as", "a",
))

_STEP4_SUFFIXES = ("i\xe8re", "I\xe8re", "ion", "ier", "Ier", "e", "\xeb")


def _replace_suffix(word: str, suffix: str, repl: str) -> str:
    return word[: -len(suffix)] + repl


def _regions_r1_r2(word: str) -> tuple[str, str]:
    # R1: after the first non-vowel following a vowel; R2: same rule inside R1.
    r1 = ""
    r2 = ""
    for i in range(1, len(word)):
        if word[i] not in VOWELS and word[i - 1] in VOWELS:
            r1 = word[i + 1:]
            break
    for i in range(1, len(r1)):
        if r1[i] not in VOWELS and r1[i - 1] in VOWELS:
            r2 = r1[i + 1:]
            break
    return r1, r2


def _region_rv(word: str) -> str:
    # RV: after the third letter when the word starts with two vowels (or
    # with "par"/"col"/"tap"), otherwise after the first non-initial vowel.
    if len(word) < 2:
        return ""
    if word.startswith(("par", "col", "tap")) or (
        word[0] in VOWELS and word[1] in VOWELS
    ):
        return word[3:]
    for i in range(1, len(word)):
        if word[i] in VOWELS:
            return word[i + 1:]
    return ""


def _mark_consonantal_uiy(word: str) -> str:
    # u after q, and u/i between vowels, act as consonants: marked upper
    # case so the suffix rules skip them. y next to a vowel likewise.
    for i in range(1, len(word)):
        if word[i - 1] == "q" and word[i] == "u":
            word = word[:i] + "U" + word[i + 1:]
    for i in range(1, len(word) - 1):
        if word[i - 1] in VOWELS and word[i + 1] in VOWELS:
            if word[i] == "u":
                word = word[:i] + "U" + word[i + 1:]
            elif word[i] == "i":
                word = word[:i] + "I" + word[i + 1:]
        if (word[i - 1] in VOWELS or word[i + 1] in VOWELS) and word[i] == "y":
            word = word[:i] + "Y" + word[i + 1:]
    return word


def stem(token: str) -> str:
    """Stem one lowercase French token. Deterministic and idempotent."""
    word = token.lower()
    while True:
        shorter = _snowball_pass(word)
        if shorter == word:
            return word
        word = shorter


def _snowball_pass(token: str) -> str:
    word = _mark_consonantal_uiy(token)

    r1, r2 = _regions_r1_r2(word)
    rv = _region_rv(word)

    step1_done = False
    rv_ending_found = False
    step2a_done = False
    step2b_done = False

    # Step 1: standard (mostly nominal) suffixes.
    for suffix in _STEP1_SUFFIXES:
        if not word.endswith(suffix):
            continue
        if suffix == "eaux":
            word = word[:-1]
            step1_done = True
        elif suffix in ("euse", "euses"):
            if suffix in r2:
                word = word[: -len(suffix)]
                step1_done = True
            elif suffix in r1:
                word = _replace_suffix(word, suffix, "eux")
                step1_done = True
        elif suffix in ("ement", "ements") and suffix in rv:
            word = word[: -len(suffix)]
            step1_done = True
            if word[-2:] == "iv" and "iv" in r2:
                word = word[:-2]
                if word[-2:] == "at" and "at" in r2:
                    word = word[:-2]
            elif word[-3:] == "eus":
                if "eus" in r2:
                    word = word[:-3]
                elif "eus" in r1:
                    word = word[:-1] + "x"
            elif word[-3:] in ("abl", "iqU"):
                if "abl" in r2 or "iqU" in r2:
                    word = word[:-3]
            elif word[-3:] in ("i\xe8r", "I\xe8r"):
                if "i\xe8r" in rv or "I\xe8r" in rv:
                    word = word[:-3] + "i"
        elif suffix == "amment" and suffix in rv:
            word = _replace_suffix(word, "amment", "ant")
            rv = _replace_suffix(rv, "amment", "ant")
            rv_ending_found = True
        elif suffix == "emment" and suffix in rv:
            word = _replace_suffix(word, "emment", "ent")
            rv_ending_found = True
        elif (
            suffix in ("ment", "ments")
            and suffix in rv
            and not rv.startswith(suffix)
            and rv[rv.rindex(suffix) - 1] in VOWELS
        ):
            word = word[: -len(suffix)]
            rv = rv[: -len(suffix)]
            rv_ending_found = True
        elif suffix == "aux" and suffix in r1:
            word = word[:-2] + "l"
            step1_done = True
        elif (
            suffix in ("issement", "issements")
            and suffix in r1
            and word[-len(suffix) - 1] not in VOWELS
        ):
            word = word[: -len(suffix)]
            step1_done = True
        elif suffix in (
            "ance", "iqUe", "isme", "able", "iste", "eux",
            "ances", "iqUes", "ismes", "ables", "istes",
        ) and suffix in r2:
            word = word[: -len(suffix)]
            step1_done = True
        elif suffix in (
            "atrice", "ateur", "ation", "atrices", "ateurs", "ations",
        ) and suffix in r2:
            word = word[: -len(suffix)]
            step1_done = True
            if word[-2:] == "ic":
                if "ic" in r2:
                    word = word[:-2]
                else:
                    word = word[:-2] + "iqU"
        elif suffix in ("logie", "logies") and suffix in r2:
            word = _replace_suffix(word, suffix, "log")
            step1_done = True
        elif suffix in ("usion", "ution", "usions", "utions") and suffix in r2:
            word = _replace_suffix(word, suffix, "u")
            step1_done = True
        elif suffix in ("ence", "ences") and suffix in r2:
            word = _replace_suffix(word, suffix, "ent")
            step1_done = True
        elif suffix in ("it\xe9", "it\xe9s") and suffix in r2:
            word = word[: -len(suffix)]
            step1_done = True
            if word[-4:] == "abil":
                if "abil" in r2:
                    word = word[:-4]
                else:
                    word = word[:-2] + "l"
            elif word[-2:] == "ic":
                if "ic" in r2:
                    word = word[:-2]
                else:
                    word = word[:-2] + "iqU"
            elif word[-2:] == "iv":
                if "iv" in r2:
                    word = word[:-2]
        elif suffix in ("if", "ive", "ifs", "ives") and suffix in r2:
            word = word[: -len(suffix)]
            step1_done = True
            if word[-2:] == "at" and "at" in r2:
                word = word[:-2]
                if word[-2:] == "ic":
                    if "ic" in r2:
                        word = word[:-2]
                    else:
                        word = word[:-2] + "iqU"
        break

    # Step 2a: verb suffixes beginning with i, only when step 1 left the
    # word untouched (or only rewrote an adverbial ending).
    if not step1_done or rv_ending_found:
        for suffix in _STEP2A_SUFFIXES:
            if word.endswith(suffix):
                if (
                    suffix in rv
                    and len(rv) > len(suffix)
                    and rv[rv.rindex(suffix) - 1] not in VOWELS
                ):
                    word = word[: -len(suffix)]
                    step2a_done = True
                break

        # Step 2b: remaining verb suffixes.
        if not step2a_done:
            for suffix in _STEP2B_SUFFIXES:
                if not rv.endswith(suffix):
                    continue
                if suffix == "ions" and "ions" in r2:
                    word = word[:-4]
                    step2b_done = True
                elif suffix in _STEP2B_E_GROUP:
                    word = word[: -len(suffix)]
                    step2b_done = True
                elif suffix in _STEP2B_A_GROUP:
                    word = word[: -len(suffix)]
                    rv = rv[: -len(suffix)]
                    step2b_done = True
                    if rv.endswith("e"):
                        word = word[:-1]
                break

    if step1_done or step2a_done or step2b_done:
        # Step 3: tidy a trailing consonantal Y or cedilla.
        if word[-1] == "Y":
            word = word[:-1] + "i"
        elif word[-1] == "\xe7":
            word = word[:-1] + "c"
    else:
        # Step 4: residual suffixes.
        if len(word) >= 2 and word[-1] == "s" and word[-2] not in "aiou\xe8s":
            word = word[:-1]
        for suffix in _STEP4_SUFFIXES:
            if word.endswith(suffix):
                if suffix in rv:
                    if (
                        suffix == "ion"
                        and suffix in r2
                        and len(rv) >= 4
                        and rv[-4] in "st"
                    ):
                        word = word[:-3]
                    elif suffix in ("ier", "i\xe8re", "Ier", "I\xe8re"):
                        word = _replace_suffix(word, suffix, "i")
                    elif suffix == "e":
                        word = word[:-1]
                    elif suffix == "\xeb" and word[-3:-1] == "gu":
                        word = word[:-1]
                    break

    # Step 5: undouble.
    if word.endswith(("enn", "onn", "ett", "ell", "eill")):
        word = word[:-1]

    # Step 6: un-accent the last vowel when it is not word-final.
    for i in range(1, len(word) + 1):
        if word[-i] in VOWELS:
            if i != 1 and word[-i] in ("\xe9", "\xe8"):
                word = word[:-i] + "e" + word[-i + 1:]
            break

    return word.replace("I", "i").replace("U", "u").replace("Y", "y")
