import pytest

from helpers import make_record
from transit_feedback.corpus import Mode, NameGenderTable
from transit_feedback.enrich import (Asset, AssetKind, EnrichedRecord, Gender,
                                     LexiconSentiment, Sentiment,
                                     enrich_pipeline, enriched_from_jsonl,
                                     enriched_to_jsonl, infer_gender,
                                     match_assets)
from transit_feedback.labels import TopicLabel


class TestAssetMatching:
    """Three pinned tweet-style fixtures plus edge behavior."""

    def test_green_line_between_stations(self, catalog):
        mode, assets = match_assets(
            "green line between West Hyattsville and PG Plaza", catalog)
        assert mode is Mode.RAIL
        assert Asset(AssetKind.LINE, "Green") in assets
        assert Asset(AssetKind.STATION, "West Hyattsville") in assets
        assert Asset(AssetKind.STATION, "Prince George's Plaza") in assets

    def test_route_and_bus_vehicle(self, catalog):
        mode, assets = match_assets("the 70 Metrobus #6032", catalog)
        assert mode is Mode.BUS
        assert Asset(AssetKind.ROUTE, "70") in assets
        assert Asset(AssetKind.VEHICLE, "6032") in assets

    def test_rail_car_and_line(self, catalog):
        mode, assets = match_assets("Car 5016 orange", catalog)
        assert mode is Mode.RAIL
        assert Asset(AssetKind.VEHICLE, "5016") in assets
        assert Asset(AssetKind.LINE, "Orange") in assets

    def test_no_assets_is_generic(self, catalog):
        mode, assets = match_assets("everything is fine thanks", catalog)
        assert mode is Mode.GENERIC
        assert assets == []

    def test_numbers_outside_ranges_ignored(self, catalog):
        _, assets = match_assets("waited 45 minutes", catalog)
        assert all(a.kind is not AssetKind.VEHICLE for a in assets)

    def test_longest_match_wins(self, catalog):
        # "west hyattsville" must match as one station, not leave a stray
        # partial-token match behind
        _, assets = match_assets("stuck at west hyattsville", catalog)
        assert assets == [Asset(AssetKind.STATION, "West Hyattsville")]

    def test_duplicates_deduped_order_kept(self, catalog):
        _, assets = match_assets("70 bus then another 70 bus", catalog)
        assert assets.count(Asset(AssetKind.ROUTE, "70")) == 1

    def test_conflicting_evidence_majority(self, catalog):
        # two rail signals vs one bus signal -> Rail
        mode, _ = match_assets(
            "took the 70 to gallery place on the red line", catalog)
        assert mode is Mode.RAIL

    def test_tie_is_generic(self, catalog):
        mode, _ = match_assets("transferred from the 70 at gallery place",
                               catalog)
        assert mode is Mode.GENERIC

    def test_matched_vehicles_within_declared_ranges(self, catalog):
        for text in ("car 2000", "bus 6999", "unit 7999"):
            _, assets = match_assets(text, catalog)
            for a in assets:
                if a.kind is AssetKind.VEHICLE:
                    assert catalog.vehicle_mode(int(a.id)) is not None


class TestSentiment:
    def test_polarity_sums(self):
        lex = LexiconSentiment()
        assert lex.sentiment("the driver was rude and late") is \
            Sentiment.NEGATIVE
        assert lex.sentiment("great service, very helpful driver") is \
            Sentiment.POSITIVE
        assert lex.sentiment("the train stopped at the platform") is \
            Sentiment.NEUTRAL

    def test_mixed_terms_cancel(self):
        lex = LexiconSentiment()
        # one positive and one negative term -> net zero -> Neutral
        pos = next(t for t, p in lex.polarity.items() if p > 0)
        neg = next(t for t, p in lex.polarity.items() if p < 0)
        assert lex.sentiment(f"{pos} {neg}") is Sentiment.NEUTRAL


class TestGender:
    def test_threshold_behavior(self):
        table = NameGenderTable.load()
        entries = table.entries
        female = next(n for n, p in entries.items() if p >= 0.9)
        male = next(n for n, p in entries.items() if p <= 0.1)
        assert infer_gender(female.title(), table) is Gender.FEMALE
        assert infer_gender(male, table) is Gender.MALE
        assert infer_gender("Zyxqw", table) is Gender.UNKNOWN
        assert infer_gender(None, table) is Gender.UNKNOWN

    def test_first_token_used(self):
        table = NameGenderTable.load()
        female = next(n for n, p in table.entries.items() if p >= 0.9)
        assert infer_gender(f"{female} Q. Rider", table) is not Gender.UNKNOWN


class TestPipeline:
    def topic_fn(self, text):
        return TopicLabel.GENERAL

    def test_counts_and_order_preserved(self, catalog):
        recs = [make_record(i, f"bus {i} late") for i in range(5)]
        out = enrich_pipeline(recs, self.topic_fn, catalog,
                              LexiconSentiment())
        assert [e.record.id for e in out] == [r.id for r in recs]

    def test_per_record_failure_isolated(self, catalog):
        recs = [make_record(0, "fine"), make_record(1, "boom"),
                make_record(2, "also fine")]

        def flaky_topic(text):
            if text == "boom":
                raise RuntimeError("scoring exploded")
            return TopicLabel.GENERAL

        out = enrich_pipeline(recs, flaky_topic, catalog, LexiconSentiment())
        assert len(out) == 3
        assert out[1].topic is TopicLabel.UNASSIGNED
        assert any("scoring exploded" in f for f in out[1].flags)
        assert out[0].topic is TopicLabel.GENERAL

    def test_gender_off_by_default(self, catalog):
        recs = [make_record(0, "late bus", author_name="Maria")]
        out = enrich_pipeline(recs, self.topic_fn, catalog,
                              LexiconSentiment(),
                              gender_table=NameGenderTable.load())
        assert out[0].gender is Gender.UNKNOWN

    def test_gender_opt_in(self, catalog):
        table = NameGenderTable.load()
        female = next(n for n, p in table.entries.items() if p >= 0.9)
        recs = [make_record(0, "late bus", author_name=female.title())]
        out = enrich_pipeline(recs, self.topic_fn, catalog,
                              LexiconSentiment(), gender_table=table,
                              infer_gender_enabled=True)
        assert out[0].gender is Gender.FEMALE

    def test_mode_hint_respected(self, catalog):
        recs = [make_record(0, "no asset mentions here",
                            mode_hint=Mode.RAIL)]
        out = enrich_pipeline(recs, self.topic_fn, catalog,
                              LexiconSentiment())
        assert out[0].mode is Mode.RAIL


class TestSerialization:
    def build(self, catalog):
        recs = [make_record(0, "the 70 Metrobus #6032 was late"),
                make_record(1, "great driver on the red line")]
        return enrich_pipeline(recs, lambda t: TopicLabel.GENERAL, catalog,
                               LexiconSentiment())

    def test_jsonl_roundtrip(self, catalog, tmp_path):
        out = self.build(catalog)
        p = tmp_path / "e.jsonl"
        enriched_to_jsonl(out, p)
        assert enriched_from_jsonl(p) == out

    def test_csv_row_shape(self, catalog):
        out = self.build(catalog)
        row = out[0].to_csv_row()
        assert row["id"] == "r0"
        assert "Route:70" in row["assets"]
        assert "Vehicle:6032" in row["assets"]
        assert row["mode"] == "Bus"
