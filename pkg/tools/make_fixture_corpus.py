"""Regenerate src/medos/data/fixture_products.jsonl from the literals below."""

import json
from pathlib import Path

PRODUCTS = [
    {
        "product_id": "P001",
        "domain": "electronics",
        "description": "Wireless over-ear Bluetooth headphones with active noise cancelling, 30 hour battery life, fast USB-C charging and a foldable design with a hard travel case.",
        "qa": [
            ("Does the noise cancelling work on airplanes?", "Yes, it blocks most engine noise on long flights."),
            ("How long does a full charge take?", "About two hours with the included USB-C cable."),
            ("Can I use them with a wired cable?", "Yes, a 3.5mm cable is in the box."),
            ("Are they comfortable with glasses?", "The pads are soft but press a little on thick frames."),
        ],
        "reviews": [
            ("Great sound and the noise cancelling is excellent on my daily train commute.", 5),
            ("Battery lasts for days, I charge them maybe once a week with USB-C.", 5),
            ("Comfortable for a couple of hours but they get warm after a long flight.", 4),
            ("The noise cancelling blocked the airplane engine noise almost completely.", 5),
            ("Bass is strong and the highs are clear, very good value for the price.", 4),
            ("Bluetooth pairing with my phone was quick and the connection never drops.", 5),
            ("They press on my glasses a bit, otherwise the fit is fine.", 3),
            ("The travel case is sturdy and the headphones fold flat into it.", 4),
            ("Microphone quality on calls is poor, people say I sound far away.", 2),
            ("Fast charging is handy, ten minutes gives me a few hours of music.", 5),
        ],
        "summaries": [
            "These headphones offer strong sound, excellent noise cancelling and a long battery life. Pairing is quick and the case is sturdy. Some find them warm on long flights and the microphone is weak on calls.",
            "Reviewers praise the noise cancelling, especially on planes and trains, and the battery that lasts for days. Comfort is good for a few hours, though they press on glasses.",
            "Good value headphones with clear sound, fast charging and reliable Bluetooth. Call quality is the main complaint.",
        ],
    },
    {
        "product_id": "P002",
        "domain": "home & kitchen",
        "description": "1.7 litre stainless steel electric kettle with a 1500 watt heating element, automatic shut off, boil dry protection and a cool touch handle.",
        "qa": [
            ("Does it have a plastic taste?", "No, the interior is all stainless steel."),
            ("How fast does it boil a full kettle?", "Roughly four minutes for 1.7 litres."),
            ("Does it turn off by itself?", "Yes, it shuts off automatically when the water boils."),
        ],
        "reviews": [
            ("Boils water very fast, about four minutes for a full kettle.", 5),
            ("No plastic taste at all, the stainless steel interior is a big plus.", 5),
            ("The handle stays cool and the automatic shut off works every time.", 5),
            ("It is quite loud while heating, louder than my old kettle.", 3),
            ("Lid opens with a button and the spout pours without dripping.", 4),
            ("After three months it started to show rust spots near the base.", 2),
            ("Looks great on the counter and is easy to wipe clean.", 4),
            ("The cord is short so it has to sit right next to the outlet.", 3),
            ("Fast and simple kettle, perfect for my morning tea.", 5),
            ("Outside gets very hot, be careful touching the body.", 3),
        ],
        "summaries": [
            "A fast stainless steel kettle that boils a full load in about four minutes with no plastic taste. The auto shut off is reliable, but it is loud and the body gets hot.",
            "Buyers like the speed, the cool handle and the clean look. Complaints mention a short cord and some rust after a few months.",
            "Quick to boil and easy to pour, this kettle suits daily tea drinkers, though it is noisy while heating.",
        ],
    },
    {
        "product_id": "P003",
        "domain": "clothing, shoes & jewelry",
        "description": "Lightweight mesh running shoes with a cushioned foam midsole, breathable upper and a rubber outsole for road running.",
        "qa": [],
        "reviews": [
            ("Very light and the cushioning makes long runs easy on my knees.", 5),
            ("Breathable mesh keeps my feet cool even in summer heat.", 5),
            ("They run half a size small, order a bigger size.", 3),
            ("Good grip on wet roads thanks to the rubber sole.", 4),
            ("The foam flattened after about three hundred miles.", 3),
            ("Comfortable right out of the box with no break in time.", 5),
            ("The mesh tore near the toe after two months of use.", 2),
            ("Stylish colours and they match my running gear.", 4),
            ("Great shoes for road running but not for trails.", 4),
            ("Arch support is decent for neutral runners like me.", 4),
        ],
        "summaries": [
            "Light, breathable running shoes with comfortable cushioning from the first run. They run small and the foam and mesh wear out sooner than expected.",
            "Runners enjoy the cool mesh and good road grip. Durability is the main concern.",
            "Comfortable and stylish road shoes, but size up and avoid trails.",
        ],
    },
    {
        "product_id": "P004",
        "domain": "personal care",
        "description": None,
        "qa": [
            ("How long does the battery last?", "About two weeks of brushing twice a day."),
            ("Are replacement heads easy to find?", "Yes, most stores carry compatible heads."),
            ("Does it have a timer?", "It has a two minute timer that pulses every thirty seconds."),
        ],
        "reviews": [
            ("My teeth feel much cleaner than with a manual brush.", 5),
            ("The battery lasts about two weeks on a single charge.", 5),
            ("The two minute timer with thirty second pulses is really helpful.", 5),
            ("Too strong on the highest setting for my sensitive gums.", 3),
            ("Replacement heads are cheap and easy to find.", 4),
            ("Charging stand is small and fits my bathroom shelf.", 4),
            ("It stopped holding a charge after eight months.", 2),
            ("Quiet compared to other electric toothbrushes I tried.", 4),
            ("My dentist noticed less plaque at my last visit.", 5),
            ("The travel case is flimsy and the lid does not close well.", 3),
        ],
        "summaries": [
            "This toothbrush cleans far better than a manual brush and the battery lasts about two weeks. The timer helps, though the strongest mode is harsh on sensitive gums.",
            "Users like the quiet motor, cheap replacement heads and visible dental results. Some report the battery failing within a year.",
            "An effective electric toothbrush with a useful timer, let down by a weak travel case.",
        ],
    },
    {
        "product_id": "P005",
        "domain": "electronics",
        "description": "Film and slide digital converter that scans 35mm film negatives and slides to 14 megapixel images, with a 2.4 inch screen and SD card storage.",
        "qa": [
            ("Does it work with Windows 10?", "It saves to an SD card so no software is needed."),
            ("Can it scan medium format film?", "No, it only takes 35mm film and slides."),
            ("Does it need a computer?", "No, it works standalone with the built in screen."),
            ("How long does each slide take?", "A few seconds per frame."),
        ],
        "reviews": [
            ("Scanned hundreds of old family slides in one weekend.", 5),
            ("Image quality is fine for sharing online but not for large prints.", 3),
            ("No computer needed, it saves straight to the SD card.", 5),
            ("Colours on negatives come out washed out and need editing.", 2),
            ("The film holders are fiddly and scratch easily.", 2),
            ("Small screen makes it hard to check the focus.", 3),
            ("Fast, a few seconds per frame once you get into a rhythm.", 4),
            ("Only works with 35mm, my medium format negatives do not fit.", 2),
            ("Simple to use, my parents figured it out without help.", 5),
            ("Dust shows up in every scan, clean the slides first.", 3),
        ],
        "summaries": [
            "A simple standalone scanner for 35mm film and slides that saves to an SD card. It is fast, but colours on negatives look washed out and the holders are fiddly.",
            "Good for digitising family slides quickly and sharing online. Not suitable for large prints or medium format film.",
            "Easy to use and quick, though dust and a small screen make quality control hard.",
        ],
    },
    {
        "product_id": "P006",
        "domain": "home & kitchen",
        "description": None,
        "qa": [],
        "reviews": [
            ("The white noise helps me fall asleep in noisy hotels.", 5),
            ("Small enough to pack in a carry on bag.", 5),
            ("There is no fine volume control, only two levels.", 3),
            ("The fan sound is natural and not tinny.", 4),
            ("Runs on USB power so I can use a phone charger.", 4),
            ("My baby sleeps longer with it running all night.", 5),
            ("The loop in the ocean sound is noticeable.", 3),
            ("It stopped working after a year of nightly use.", 2),
            ("Buttons are easy to find in the dark.", 4),
            ("Great travel companion for light sleepers.", 5),
        ],
        "summaries": [
            "A compact sound machine that helps light sleepers in hotels and at home. The fan sound is natural, but volume control is limited.",
            "Travellers like the small size and USB power. A few units failed after a year.",
            "Helpful for sleep and easy to pack, though the ocean loop is noticeable.",
        ],
    },
]


def main():
    out = Path(__file__).resolve().parents[1] / "src" / "medos" / "data" / "fixture_products.jsonl"
    with out.open("w", encoding="utf-8") as fh:
        for p in PRODUCTS:
            rec = {
                "product_id": p["product_id"],
                "domain": p["domain"],
                "reviews": [
                    {"review_id": f"r{i + 1}", "text": t, "rating": r} for i, (t, r) in enumerate(p["reviews"])
                ],
                "description": p["description"],
                "qa": [{"question": q, "answer": a} for q, a in p["qa"]],
                "summaries": p["summaries"],
            }
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    print(out)


if __name__ == "__main__":
    main()
