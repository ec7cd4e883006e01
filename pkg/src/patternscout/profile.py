"""Pattern Profiles: the per-pattern input that drives detection.

A profile bundles a pattern's name, natural-language description, path
globs, detection keywords, and example instance snippets. Profiles are
stored one per YAML file; the built-in set ships with the package under
``profiles/``.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import yaml

from .errors import ProfileError
from .globmatch import compile_glob

MAX_DESCRIPTION_CHARS = 2_000
MAX_EXAMPLE_CHARS = 50_000
MAX_EXAMPLES = 10

BUILTIN_PATTERN_NAMES = (
    "3rd Party Registration",
    "Multiple Service Instances Per Host",
    "Server-Side Service Discovery",
    "Service Deployment Platform",
    "Service Instance Per Container",
    "Service Instance Per VM",
    "Service Mesh",
    "Service Registry",
    "Single Service Instance Per Host",
)

_FIELD_ORDER = ("name", "description", "catalog_url", "globs", "keywords", "examples")


@dataclass(frozen=True)
class PatternProfile:
    name: str
    description: str
    catalog_url: str = ""
    globs: tuple[str, ...] = ()
    keywords: tuple[str, ...] = ()
    examples: tuple[str, ...] = ()

    @property
    def degraded(self) -> bool:
        """True when the profile carries no examples: the embedding signal
        is unavailable and its weight is folded into keyword matching."""
        return len(self.examples) == 0

    def validate(self, source: str | None = None) -> None:
        def bad(field_name: str, message: str) -> ProfileError:
            return ProfileError(message, field=field_name, path=source)

        if not isinstance(self.name, str) or not self.name.strip():
            raise bad("name", "name must be a non-empty string")
        if not isinstance(self.description, str) or not 1 <= len(self.description) <= MAX_DESCRIPTION_CHARS:
            raise bad("description", f"description must be 1..{MAX_DESCRIPTION_CHARS} characters")
        if not isinstance(self.catalog_url, str):
            raise bad("catalog_url", "catalog_url must be a string")
        if len(self.globs) < 1:
            raise bad("globs", "at least one glob is required")
        for g in self.globs:
            try:
                compile_glob(g)
            except Exception as exc:
                raise bad("globs", f"glob {g!r} does not parse: {exc}") from exc
        if len(self.keywords) < 1:
            raise bad("keywords", "at least one keyword is required")
        for kw in self.keywords:
            if not kw or kw != kw.casefold():
                raise bad("keywords", f"keyword {kw!r} is not in lowercase canonical form")
        if len(set(self.keywords)) != len(self.keywords):
            raise bad("keywords", "keywords contain duplicates after case-folding")
        if len(self.examples) > MAX_EXAMPLES:
            raise bad("examples", f"at most {MAX_EXAMPLES} examples are allowed")
        for ex in self.examples:
            if len(ex) > MAX_EXAMPLE_CHARS:
                raise bad("examples", f"example exceeds {MAX_EXAMPLE_CHARS} characters")


def normalize_keywords(raw: list[str]) -> tuple[str, ...]:
    """Case-fold, strip, and deduplicate keywords, preserving first-seen order."""
    seen: dict[str, None] = {}
    for kw in raw:
        canonical = str(kw).strip().casefold()
        if canonical:
            seen.setdefault(canonical, None)
    return tuple(seen)


def profile_from_mapping(data: dict, source: str | None = None) -> PatternProfile:
    """Build and validate a profile from parsed YAML/JSON data."""
    if not isinstance(data, dict):
        raise ProfileError("profile document must be a mapping", path=source)
    unknown = set(data) - set(_FIELD_ORDER)
    if unknown:
        raise ProfileError(f"unknown profile fields: {sorted(unknown)}", path=source)
    for required in ("name", "description", "globs", "keywords"):
        if required not in data:
            raise ProfileError("missing required field", field=required, path=source)

    def str_list(field_name: str) -> tuple[str, ...]:
        value = data.get(field_name, [])
        if value is None:
            value = []
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise ProfileError("must be a list of strings", field=field_name, path=source)
        return tuple(value)

    profile = PatternProfile(
        name=str(data["name"]),
        description=str(data["description"]),
        catalog_url=str(data.get("catalog_url") or ""),
        globs=str_list("globs"),
        keywords=normalize_keywords(list(str_list("keywords"))),
        examples=str_list("examples"),
    )
    profile.validate(source=source)
    return profile


def load_profile(path: str | Path) -> PatternProfile:
    """Load and validate one profile file."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProfileError(f"unreadable profile file: {exc}", path=str(p)) from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ProfileError(f"unparseable YAML: {exc}", path=str(p)) from exc
    return profile_from_mapping(data, source=str(p))


def load_profiles(directory: str | Path) -> list[PatternProfile]:
    """Load every profile in a directory, name-sorted; duplicate names are an error."""
    d = Path(directory)
    if not d.is_dir():
        raise ProfileError(f"profile directory missing: {d}")
    files = sorted(p for p in d.iterdir() if p.suffix in (".yaml", ".yml") and p.is_file())
    if not files:
        raise ProfileError(f"no profile files (*.yaml) in {d}")
    by_name: dict[str, Path] = {}
    profiles: list[PatternProfile] = []
    for f in files:
        profile = load_profile(f)
        if profile.name in by_name:
            raise ProfileError(
                f"duplicate pattern name {profile.name!r} (also defined in {by_name[profile.name]})",
                field="name",
                path=str(f),
            )
        by_name[profile.name] = f
        profiles.append(profile)
    return sorted(profiles, key=lambda p: p.name)


class _ProfileDumper(yaml.SafeDumper):
    pass


def _represent_str(dumper: yaml.SafeDumper, value: str):
    if "\n" in value:
        return dumper.represent_scalar("tag:yaml.org,2002:str", value, style="|")
    return dumper.represent_scalar("tag:yaml.org,2002:str", value)


_ProfileDumper.add_representer(str, _represent_str)


def dump_profile(profile: PatternProfile) -> str:
    """Serialize a profile to canonical YAML (stable field order and style)."""
    data = {
        "name": profile.name,
        "description": profile.description,
        "catalog_url": profile.catalog_url,
        "globs": list(profile.globs),
        "keywords": list(profile.keywords),
        "examples": list(profile.examples),
    }
    return yaml.dump(
        data,
        Dumper=_ProfileDumper,
        sort_keys=False,
        default_flow_style=False,
        allow_unicode=True,
        width=10_000,
    )


def save_profile(profile: PatternProfile, path: str | Path) -> None:
    profile.validate()
    Path(path).write_text(dump_profile(profile), encoding="utf-8")


def builtin_profiles_dir() -> Path:
    """Directory holding the nine built-in pattern profiles."""
    return Path(str(resources.files("patternscout").joinpath("profiles")))


def load_builtin_profiles() -> list[PatternProfile]:
    return load_profiles(builtin_profiles_dir())


def generate_profile(name: str, description: str, catalog_url: str, provider) -> PatternProfile:
    """Ask the provider to draft a profile for a new pattern.

    The caller is expected to review the result before using it. The
    generation prompt and raw response land in the provider's trace log.
    """
    if not name.strip():
        raise ProfileError("pattern name must be non-empty", field="name")
    if not description.strip():
        raise ProfileError("pattern description must be non-empty", field="description")

    from .provider import LlmRequest, render_prompt  # late import keeps module load acyclic

    user_text = render_prompt(
        "profile_gen",
        pattern_name=name,
        description=description,
        catalog_url=catalog_url or "(none)",
    )
    request = LlmRequest(
        system_text="You design detection profiles for architectural patterns in software repositories.",
        user_text=user_text,
        response_schema_id="profile_gen",
        seed=provider.seed,
        context={"pattern": name, "name": name, "description": description},
    )
    body = provider.chat(request)
    # the user-supplied identity wins over whatever the model echoed back
    body = dict(body)
    body["name"] = name
    body["catalog_url"] = catalog_url
    return profile_from_mapping(body, source="<generated>")
