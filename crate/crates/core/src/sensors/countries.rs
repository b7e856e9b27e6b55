//! Embedded country tables: ISO 3166-1 alpha-3 names and the European list
//! that decides emissions-provider routing.

use serde::{Deserialize, Serialize};

/// Version tag of the embedded tables; bump when either list changes.
pub const TABLE_VERSION: &str = "countries-v1";

/// Geographic Europe, EU and non-EU states plus dependent territories.
/// Sorted for binary search.
pub const EUROPEAN: &[&str] = &[
    "ALA", "ALB", "AND", "AUT", "BEL", "BGR", "BIH", "BLR", "CHE", "CYP", "CZE", "DEU", "DNK",
    "ESP", "EST", "FIN", "FRA", "FRO", "GBR", "GGY", "GIB", "GRC", "HRV", "HUN", "IMN", "IRL",
    "ISL", "ITA", "JEY", "LIE", "LTU", "LUX", "LVA", "MCO", "MDA", "MKD", "MLT", "MNE", "NLD",
    "NOR", "POL", "PRT", "ROU", "RUS", "SJM", "SMR", "SRB", "SVK", "SVN", "SWE", "UKR", "VAT",
    "XKX",
];

/// Alpha-3 code to accepted English names; the first name is canonical.
/// Sorted by code.
const NAMES: &[(&str, &[&str])] = &[
    ("ABW", &["Aruba"]),
    ("AFG", &["Afghanistan"]),
    ("AGO", &["Angola"]),
    ("AIA", &["Anguilla"]),
    ("ALA", &["Åland Islands", "Aland Islands"]),
    ("ALB", &["Albania"]),
    ("AND", &["Andorra"]),
    ("ARE", &["United Arab Emirates"]),
    ("ARG", &["Argentina"]),
    ("ARM", &["Armenia"]),
    ("ASM", &["American Samoa"]),
    ("ATA", &["Antarctica"]),
    ("ATF", &["French Southern Territories"]),
    ("ATG", &["Antigua and Barbuda"]),
    ("AUS", &["Australia"]),
    ("AUT", &["Austria"]),
    ("AZE", &["Azerbaijan"]),
    ("BDI", &["Burundi"]),
    ("BEL", &["Belgium"]),
    ("BEN", &["Benin"]),
    ("BES", &["Bonaire, Sint Eustatius and Saba", "Caribbean Netherlands"]),
    ("BFA", &["Burkina Faso"]),
    ("BGD", &["Bangladesh"]),
    ("BGR", &["Bulgaria"]),
    ("BHR", &["Bahrain"]),
    ("BHS", &["Bahamas", "The Bahamas"]),
    ("BIH", &["Bosnia and Herzegovina"]),
    ("BLM", &["Saint Barthélemy", "Saint Barthelemy"]),
    ("BLR", &["Belarus"]),
    ("BLZ", &["Belize"]),
    ("BMU", &["Bermuda"]),
    ("BOL", &["Bolivia", "Bolivia, Plurinational State of"]),
    ("BRA", &["Brazil"]),
    ("BRB", &["Barbados"]),
    ("BRN", &["Brunei", "Brunei Darussalam"]),
    ("BTN", &["Bhutan"]),
    ("BVT", &["Bouvet Island"]),
    ("BWA", &["Botswana"]),
    ("CAF", &["Central African Republic"]),
    ("CAN", &["Canada"]),
    ("CCK", &["Cocos (Keeling) Islands"]),
    ("CHE", &["Switzerland"]),
    ("CHL", &["Chile"]),
    ("CHN", &["China"]),
    ("CIV", &["Côte d'Ivoire", "Cote d'Ivoire", "Ivory Coast"]),
    ("CMR", &["Cameroon"]),
    ("COD", &["Democratic Republic of the Congo", "Congo, Democratic Republic of the"]),
    ("COG", &["Congo", "Republic of the Congo"]),
    ("COK", &["Cook Islands"]),
    ("COL", &["Colombia"]),
    ("COM", &["Comoros"]),
    ("CPV", &["Cabo Verde", "Cape Verde"]),
    ("CRI", &["Costa Rica"]),
    ("CUB", &["Cuba"]),
    ("CUW", &["Curaçao", "Curacao"]),
    ("CXR", &["Christmas Island"]),
    ("CYM", &["Cayman Islands"]),
    ("CYP", &["Cyprus"]),
    ("CZE", &["Czechia", "Czech Republic"]),
    ("DEU", &["Germany"]),
    ("DJI", &["Djibouti"]),
    ("DMA", &["Dominica"]),
    ("DNK", &["Denmark"]),
    ("DOM", &["Dominican Republic"]),
    ("DZA", &["Algeria"]),
    ("ECU", &["Ecuador"]),
    ("EGY", &["Egypt"]),
    ("ERI", &["Eritrea"]),
    ("ESH", &["Western Sahara"]),
    ("ESP", &["Spain"]),
    ("EST", &["Estonia"]),
    ("ETH", &["Ethiopia"]),
    ("FIN", &["Finland"]),
    ("FJI", &["Fiji"]),
    ("FLK", &["Falkland Islands", "Falkland Islands (Malvinas)"]),
    ("FRA", &["France"]),
    ("FRO", &["Faroe Islands"]),
    ("FSM", &["Micronesia", "Micronesia, Federated States of"]),
    ("GAB", &["Gabon"]),
    ("GBR", &["United Kingdom", "United Kingdom of Great Britain and Northern Ireland", "UK"]),
    ("GEO", &["Georgia"]),
    ("GGY", &["Guernsey"]),
    ("GHA", &["Ghana"]),
    ("GIB", &["Gibraltar"]),
    ("GIN", &["Guinea"]),
    ("GLP", &["Guadeloupe"]),
    ("GMB", &["Gambia", "The Gambia"]),
    ("GNB", &["Guinea-Bissau"]),
    ("GNQ", &["Equatorial Guinea"]),
    ("GRC", &["Greece"]),
    ("GRD", &["Grenada"]),
    ("GRL", &["Greenland"]),
    ("GTM", &["Guatemala"]),
    ("GUF", &["French Guiana"]),
    ("GUM", &["Guam"]),
    ("GUY", &["Guyana"]),
    ("HKG", &["Hong Kong"]),
    ("HMD", &["Heard Island and McDonald Islands"]),
    ("HND", &["Honduras"]),
    ("HRV", &["Croatia"]),
    ("HTI", &["Haiti"]),
    ("HUN", &["Hungary"]),
    ("IDN", &["Indonesia"]),
    ("IMN", &["Isle of Man"]),
    ("IND", &["India"]),
    ("IOT", &["British Indian Ocean Territory"]),
    ("IRL", &["Ireland"]),
    ("IRN", &["Iran", "Iran, Islamic Republic of"]),
    ("IRQ", &["Iraq"]),
    ("ISL", &["Iceland"]),
    ("ISR", &["Israel"]),
    ("ITA", &["Italy"]),
    ("JAM", &["Jamaica"]),
    ("JEY", &["Jersey"]),
    ("JOR", &["Jordan"]),
    ("JPN", &["Japan"]),
    ("KAZ", &["Kazakhstan"]),
    ("KEN", &["Kenya"]),
    ("KGZ", &["Kyrgyzstan"]),
    ("KHM", &["Cambodia"]),
    ("KIR", &["Kiribati"]),
    ("KNA", &["Saint Kitts and Nevis"]),
    ("KOR", &["South Korea", "Korea, Republic of", "Korea"]),
    ("KWT", &["Kuwait"]),
    ("LAO", &["Laos", "Lao People's Democratic Republic"]),
    ("LBN", &["Lebanon"]),
    ("LBR", &["Liberia"]),
    ("LBY", &["Libya"]),
    ("LCA", &["Saint Lucia"]),
    ("LIE", &["Liechtenstein"]),
    ("LKA", &["Sri Lanka"]),
    ("LSO", &["Lesotho"]),
    ("LTU", &["Lithuania"]),
    ("LUX", &["Luxembourg"]),
    ("LVA", &["Latvia"]),
    ("MAC", &["Macao", "Macau"]),
    ("MAF", &["Saint Martin"]),
    ("MAR", &["Morocco"]),
    ("MCO", &["Monaco"]),
    ("MDA", &["Moldova", "Moldova, Republic of"]),
    ("MDG", &["Madagascar"]),
    ("MDV", &["Maldives"]),
    ("MEX", &["Mexico"]),
    ("MHL", &["Marshall Islands"]),
    ("MKD", &["North Macedonia", "Macedonia"]),
    ("MLI", &["Mali"]),
    ("MLT", &["Malta"]),
    ("MMR", &["Myanmar", "Burma"]),
    ("MNE", &["Montenegro"]),
    ("MNG", &["Mongolia"]),
    ("MNP", &["Northern Mariana Islands"]),
    ("MOZ", &["Mozambique"]),
    ("MRT", &["Mauritania"]),
    ("MSR", &["Montserrat"]),
    ("MTQ", &["Martinique"]),
    ("MUS", &["Mauritius"]),
    ("MWI", &["Malawi"]),
    ("MYS", &["Malaysia"]),
    ("MYT", &["Mayotte"]),
    ("NAM", &["Namibia"]),
    ("NCL", &["New Caledonia"]),
    ("NER", &["Niger"]),
    ("NFK", &["Norfolk Island"]),
    ("NGA", &["Nigeria"]),
    ("NIC", &["Nicaragua"]),
    ("NIU", &["Niue"]),
    ("NLD", &["Netherlands", "The Netherlands"]),
    ("NOR", &["Norway"]),
    ("NPL", &["Nepal"]),
    ("NRU", &["Nauru"]),
    ("NZL", &["New Zealand"]),
    ("OMN", &["Oman"]),
    ("PAK", &["Pakistan"]),
    ("PAN", &["Panama"]),
    ("PCN", &["Pitcairn"]),
    ("PER", &["Peru"]),
    ("PHL", &["Philippines"]),
    ("PLW", &["Palau"]),
    ("PNG", &["Papua New Guinea"]),
    ("POL", &["Poland"]),
    ("PRI", &["Puerto Rico"]),
    ("PRK", &["North Korea", "Korea, Democratic People's Republic of"]),
    ("PRT", &["Portugal"]),
    ("PRY", &["Paraguay"]),
    ("PSE", &["Palestine", "Palestine, State of"]),
    ("PYF", &["French Polynesia"]),
    ("QAT", &["Qatar"]),
    ("REU", &["Réunion", "Reunion"]),
    ("ROU", &["Romania"]),
    ("RUS", &["Russia", "Russian Federation"]),
    ("RWA", &["Rwanda"]),
    ("SAU", &["Saudi Arabia"]),
    ("SDN", &["Sudan"]),
    ("SEN", &["Senegal"]),
    ("SGP", &["Singapore"]),
    ("SGS", &["South Georgia and the South Sandwich Islands"]),
    ("SHN", &["Saint Helena, Ascension and Tristan da Cunha", "Saint Helena"]),
    ("SJM", &["Svalbard and Jan Mayen"]),
    ("SLB", &["Solomon Islands"]),
    ("SLE", &["Sierra Leone"]),
    ("SLV", &["El Salvador"]),
    ("SMR", &["San Marino"]),
    ("SOM", &["Somalia"]),
    ("SPM", &["Saint Pierre and Miquelon"]),
    ("SRB", &["Serbia"]),
    ("SSD", &["South Sudan"]),
    ("STP", &["Sao Tome and Principe"]),
    ("SUR", &["Suriname"]),
    ("SVK", &["Slovakia"]),
    ("SVN", &["Slovenia"]),
    ("SWE", &["Sweden"]),
    ("SWZ", &["Eswatini", "Swaziland"]),
    ("SXM", &["Sint Maarten"]),
    ("SYC", &["Seychelles"]),
    ("SYR", &["Syria", "Syrian Arab Republic"]),
    ("TCA", &["Turks and Caicos Islands"]),
    ("TCD", &["Chad"]),
    ("TGO", &["Togo"]),
    ("THA", &["Thailand"]),
    ("TJK", &["Tajikistan"]),
    ("TKL", &["Tokelau"]),
    ("TKM", &["Turkmenistan"]),
    ("TLS", &["Timor-Leste", "East Timor"]),
    ("TON", &["Tonga"]),
    ("TTO", &["Trinidad and Tobago"]),
    ("TUN", &["Tunisia"]),
    ("TUR", &["Turkey", "Türkiye", "Turkiye"]),
    ("TUV", &["Tuvalu"]),
    ("TWN", &["Taiwan"]),
    ("TZA", &["Tanzania", "Tanzania, United Republic of"]),
    ("UGA", &["Uganda"]),
    ("UKR", &["Ukraine"]),
    ("UMI", &["United States Minor Outlying Islands"]),
    ("URY", &["Uruguay"]),
    ("USA", &["United States", "United States of America", "USA"]),
    ("UZB", &["Uzbekistan"]),
    ("VAT", &["Holy See", "Vatican City"]),
    ("VCT", &["Saint Vincent and the Grenadines"]),
    ("VEN", &["Venezuela", "Venezuela, Bolivarian Republic of"]),
    ("VGB", &["British Virgin Islands", "Virgin Islands, British"]),
    ("VIR", &["U.S. Virgin Islands", "Virgin Islands, U.S."]),
    ("VNM", &["Vietnam", "Viet Nam"]),
    ("VUT", &["Vanuatu"]),
    ("WLF", &["Wallis and Futuna"]),
    ("WSM", &["Samoa"]),
    ("XKX", &["Kosovo"]),
    ("YEM", &["Yemen"]),
    ("ZAF", &["South Africa"]),
    ("ZMB", &["Zambia"]),
    ("ZWE", &["Zimbabwe"]),
];

/// Emissions data source for a region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EmissionsRoute {
    /// European air-quality reanalysis provider.
    #[serde(rename = "EU")]
    Eu,
    /// Station-network provider for the rest of the world.
    #[serde(rename = "ROW")]
    Row,
}

pub fn is_european(alpha3: &str) -> bool {
    EUROPEAN.binary_search(&alpha3).is_ok()
}

/// `Eu` for codes in [`EUROPEAN`], `Row` for everything else including
/// unknown or empty codes.
pub fn route_emissions_provider(country_code: &str) -> EmissionsRoute {
    if is_european(country_code.trim()) {
        EmissionsRoute::Eu
    } else {
        EmissionsRoute::Row
    }
}

pub fn country_names(alpha3: &str) -> Option<&'static [&'static str]> {
    NAMES
        .binary_search_by(|(code, _)| code.cmp(&alpha3))
        .ok()
        .map(|i| NAMES[i].1)
}

pub fn country_name(alpha3: &str) -> Option<&'static str> {
    country_names(alpha3).and_then(|n| n.first().copied())
}

/// Whether the name a provider reported matches the record's country code,
/// ignoring case and surrounding whitespace.
pub fn validate_country(country_code: &str, api_country_name: &str) -> bool {
    let wanted = api_country_name.trim().to_lowercase();
    country_names(country_code.trim())
        .is_some_and(|names| names.iter().any(|n| n.to_lowercase() == wanted))
}
