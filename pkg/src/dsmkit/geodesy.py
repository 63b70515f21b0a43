"""WGS-84 geographic <-> UTM projected coordinate conversion.

Forward and inverse transverse Mercator use the 6th-order Krüger series in
the third flattening n, which is accurate to well under a millimeter inside
a UTM zone. Degree/minute/second parsing accepts both ASCII and typographic
marks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DataError, ParseError

# WGS-84 ellipsoid
WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563

UTM_SCALE = 0.9996
FALSE_EASTING = 500000.0
FALSE_NORTHING_SOUTH = 10000000.0
UTM_LAT_BAND = 84.0  # |latitude| limit for UTM validity

_E = math.sqrt(WGS84_F * (2.0 - WGS84_F))  # first eccentricity
_N = WGS84_F / (2.0 - WGS84_F)  # third flattening

# Rectifying radius: A = a/(1+n) (1 + n^2/4 + n^4/64 + n^6/256)
_RECTIFYING_RADIUS = (WGS84_A / (1.0 + _N)) * (
    1.0 + _N**2 / 4.0 + _N**4 / 64.0 + _N**6 / 256.0
)

# Krüger series coefficients in the third flattening, to order n^6.
_ALPHA = (
    _N / 2.0 - 2.0 / 3.0 * _N**2 + 5.0 / 16.0 * _N**3 + 41.0 / 180.0 * _N**4
    - 127.0 / 288.0 * _N**5 + 7891.0 / 37800.0 * _N**6,
    13.0 / 48.0 * _N**2 - 3.0 / 5.0 * _N**3 + 557.0 / 1440.0 * _N**4
    + 281.0 / 630.0 * _N**5 - 1983433.0 / 1935360.0 * _N**6,
    61.0 / 240.0 * _N**3 - 103.0 / 140.0 * _N**4 + 15061.0 / 26880.0 * _N**5
    + 167603.0 / 181440.0 * _N**6,
    49561.0 / 161280.0 * _N**4 - 179.0 / 168.0 * _N**5
    + 6601661.0 / 7257600.0 * _N**6,
    34729.0 / 80640.0 * _N**5 - 3418889.0 / 1995840.0 * _N**6,
    212378941.0 / 319334400.0 * _N**6,
)
_BETA = (
    _N / 2.0 - 2.0 / 3.0 * _N**2 + 37.0 / 96.0 * _N**3 - 1.0 / 360.0 * _N**4
    - 81.0 / 512.0 * _N**5 + 96199.0 / 604800.0 * _N**6,
    1.0 / 48.0 * _N**2 + 1.0 / 15.0 * _N**3 - 437.0 / 1440.0 * _N**4
    + 46.0 / 105.0 * _N**5 - 1118711.0 / 3870720.0 * _N**6,
    17.0 / 480.0 * _N**3 - 37.0 / 840.0 * _N**4 - 209.0 / 4480.0 * _N**5
    + 5569.0 / 90720.0 * _N**6,
    4397.0 / 161280.0 * _N**4 - 11.0 / 504.0 * _N**5
    - 830251.0 / 7257600.0 * _N**6,
    4583.0 / 161280.0 * _N**5 - 108847.0 / 3991680.0 * _N**6,
    20648693.0 / 638668800.0 * _N**6,
)


def normalize_longitude(longitude: float) -> float:
    """Wrap a longitude in degrees into [-180, 180).

    In-range values pass through bit-exactly.
    """
    if -180.0 <= longitude < 180.0:
        return longitude
    lon = (longitude + 180.0) % 360.0 - 180.0
    # % can land exactly on the wrap point for inputs a hair below it
    if lon >= 180.0:
        lon -= 360.0
    return lon


@dataclass(frozen=True)
class GeoPoint:
    """Geographic sample: latitude/longitude in degrees, altitude in meters."""

    latitude: float
    longitude: float
    altitude: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.latitude) and math.isfinite(self.longitude)
                and math.isfinite(self.altitude)):
            raise DataError(f"non-finite GeoPoint: {self}")
        if not -90.0 <= self.latitude <= 90.0:
            raise DataError(f"latitude {self.latitude} outside [-90, 90]")
        object.__setattr__(self, "longitude", normalize_longitude(self.longitude))


@dataclass(frozen=True)
class UtmPoint:
    """Projected sample: easting/northing in meters plus zone and hemisphere."""

    easting: float
    northing: float
    zone: int
    hemisphere: str  # "north" | "south"
    altitude: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.easting) and math.isfinite(self.northing)
                and math.isfinite(self.altitude)):
            raise DataError(f"non-finite UtmPoint: {self}")
        if not (isinstance(self.zone, int) and 1 <= self.zone <= 60):
            raise DataError(f"UTM zone {self.zone!r} outside [1, 60]")
        if self.hemisphere not in ("north", "south"):
            raise DataError(f"hemisphere must be 'north' or 'south', got {self.hemisphere!r}")


def utm_zone_for(longitude: float, latitude: float) -> int:
    """Standard UTM zone number for a longitude, clamped to [1, 60].

    Latitude is accepted for interface symmetry; the plain 6-degree zoning
    rule ignores it.
    """
    lon = normalize_longitude(longitude)
    zone = int(math.floor((lon + 180.0) / 6.0)) + 1
    return min(60, max(1, zone))


def zone_central_meridian(zone: int) -> float:
    """Central meridian of a UTM zone, in degrees."""
    return float(zone * 6 - 183)


def _tau_prime(tau: float) -> float:
    # tan of the conformal latitude from tan of the geodetic latitude
    sigma = math.sinh(_E * math.atanh(_E * tau / math.hypot(1.0, tau)))
    return tau * math.hypot(1.0, sigma) - sigma * math.hypot(1.0, tau)


def _tau_from_tau_prime(taup: float) -> float:
    # Invert tau' = tau sqrt(1+sigma^2) - sigma sqrt(1+tau^2) by Newton
    e2 = _E * _E
    tau = taup / math.sqrt(1.0 - e2)
    for _ in range(8):
        taup_i = _tau_prime(tau)
        dtau = (
            (taup - taup_i)
            * (1.0 + (1.0 - e2) * tau * tau)
            / ((1.0 - e2) * math.hypot(1.0, taup_i) * math.hypot(1.0, tau))
        )
        tau += dtau
        if abs(dtau) < 1e-16 * max(1.0, abs(tau)):
            break
    return tau


def wgs84_to_utm(p: GeoPoint, zone: int | None = None) -> UtmPoint:
    """Project a geographic point to UTM on the WGS-84 ellipsoid.

    The zone defaults to the point's own 6-degree zone; pass an explicit
    zone to keep a whole dataset in one projection frame.
    """
    if abs(p.latitude) > UTM_LAT_BAND:
        raise DataError(
            f"latitude {p.latitude} outside the UTM band [-{UTM_LAT_BAND}, {UTM_LAT_BAND}]"
        )
    if zone is None:
        zone = utm_zone_for(p.longitude, p.latitude)
    elif not (isinstance(zone, int) and 1 <= zone <= 60):
        raise DataError(f"UTM zone {zone!r} outside [1, 60]")

    lat = math.radians(p.latitude)
    lam = math.radians(normalize_longitude(p.longitude - zone_central_meridian(zone)))

    taup = _tau_prime(math.tan(lat))
    cos_lam = math.cos(lam)
    sin_lam = math.sin(lam)
    xi_p = math.atan2(taup, cos_lam)
    eta_p = math.asinh(sin_lam / math.hypot(taup, cos_lam))

    xi = xi_p
    eta = eta_p
    for j, alpha in enumerate(_ALPHA, start=1):
        xi += alpha * math.sin(2 * j * xi_p) * math.cosh(2 * j * eta_p)
        eta += alpha * math.cos(2 * j * xi_p) * math.sinh(2 * j * eta_p)

    easting = FALSE_EASTING + UTM_SCALE * _RECTIFYING_RADIUS * eta
    northing = UTM_SCALE * _RECTIFYING_RADIUS * xi
    hemisphere = "north" if p.latitude >= 0.0 else "south"
    if hemisphere == "south":
        northing += FALSE_NORTHING_SOUTH
    return UtmPoint(easting, northing, zone, hemisphere, p.altitude)


def utm_to_wgs84(p: UtmPoint) -> GeoPoint:
    """Inverse projection back to WGS-84 geographic coordinates."""
    if not 100000.0 < p.easting < 900000.0:
        raise DataError(f"easting {p.easting} outside (100000, 900000)")
    if not 0.0 <= p.northing < 10000000.0:
        raise DataError(f"northing {p.northing} outside [0, 10000000)")

    northing = p.northing
    if p.hemisphere == "south":
        northing -= FALSE_NORTHING_SOUTH

    xi = northing / (UTM_SCALE * _RECTIFYING_RADIUS)
    eta = (p.easting - FALSE_EASTING) / (UTM_SCALE * _RECTIFYING_RADIUS)

    xi_p = xi
    eta_p = eta
    for j, beta in enumerate(_BETA, start=1):
        xi_p -= beta * math.sin(2 * j * xi) * math.cosh(2 * j * eta)
        eta_p -= beta * math.cos(2 * j * xi) * math.sinh(2 * j * eta)

    sinh_eta = math.sinh(eta_p)
    cos_xi = math.cos(xi_p)
    taup = math.sin(xi_p) / math.hypot(sinh_eta, cos_xi)
    lam = math.atan2(sinh_eta, cos_xi)

    latitude = math.degrees(math.atan(_tau_from_tau_prime(taup)))
    longitude = normalize_longitude(math.degrees(lam) + zone_central_meridian(p.zone))
    return GeoPoint(latitude, longitude, p.altitude)


# DMS parsing: tolerate typographic degree/minute/second marks
_DEGREE_MARKS = "°ºd"
_MINUTE_MARKS = "'′’m"
_SECOND_MARKS = '"”″s'


def parse_dms(text: str) -> float:
    """Parse `N48°43'20.64"` style DMS or signed decimal degrees to degrees.

    South and west hemispheres are negative. The hemisphere letter may lead
    or trail. Raises ParseError with the failing offset on malformed input.
    """
    s = text.strip()
    if not s:
        raise ParseError("empty coordinate string", offset=0)
    try:
        value = float(s)
    except ValueError:
        pass
    else:
        if not math.isfinite(value):
            raise ParseError(f"non-finite coordinate {s!r}", offset=0)
        return value

    pos = 0
    n = len(s)

    def skip_spaces():
        nonlocal pos
        while pos < n and s[pos].isspace():
            pos += 1

    def read_number(what: str) -> float:
        nonlocal pos
        skip_spaces()
        start = pos
        while pos < n and (s[pos].isdigit() or s[pos] == "."):
            pos += 1
        if pos == start:
            raise ParseError(f"expected {what} in {text!r}", offset=start)
        try:
            return float(s[start:pos])
        except ValueError:
            raise ParseError(f"bad {what} {s[start:pos]!r} in {text!r}", offset=start) from None

    def read_mark(marks: str, what: str):
        nonlocal pos
        skip_spaces()
        if pos >= n or s[pos] not in marks:
            raise ParseError(f"expected {what} mark in {text!r}", offset=pos)
        pos += 1

    hemisphere = None
    skip_spaces()
    if pos < n and s[pos].upper() in "NSEW":
        hemisphere = s[pos].upper()
        pos += 1

    degrees = read_number("degrees")
    read_mark(_DEGREE_MARKS, "degree")
    minutes = read_number("minutes")
    read_mark(_MINUTE_MARKS, "minute")
    seconds = read_number("seconds")
    read_mark(_SECOND_MARKS, "second")

    skip_spaces()
    if hemisphere is None and pos < n and s[pos].upper() in "NSEW":
        hemisphere = s[pos].upper()
        pos += 1
    skip_spaces()
    if pos != n:
        raise ParseError(f"trailing characters in {text!r}", offset=pos)
    if minutes >= 60.0 or seconds >= 60.0:
        raise ParseError(f"minutes/seconds out of range in {text!r}", offset=0)

    value = degrees + minutes / 60.0 + seconds / 3600.0
    if hemisphere in ("S", "W"):
        value = -value
    return value
