#!/usr/bin/env python3
"""Writes the small pcap fixtures used by the unit tests.

Frames are assembled byte by byte with struct at RFC field offsets, so the
expected values in expected.json come from this script and not from the
library under test. When scapy is importable every frame is re-dissected
with it and the expected values are checked against scapy's reading.

    python3 tests/fixtures/make_fixtures.py [outdir]
"""

import json
import os
import struct
import sys

DEV_A = "02:00:00:00:00:0a"
DEV_B = "02:00:00:00:00:0b"
STRANGER = "02:00:00:00:00:ff"
GATEWAY = "02:00:00:00:00:01"


def mac(text):
    return bytes(int(x, 16) for x in text.split(":"))


def ip4(text):
    return bytes(int(x) for x in text.split("."))


def csum(data):
    if len(data) % 2:
        data += b"\0"
    s = sum(struct.unpack("!%dH" % (len(data) // 2), data))
    while s >> 16:
        s = (s & 0xFFFF) + (s >> 16)
    return (~s) & 0xFFFF


def eth(dst, src, ethertype, payload):
    return mac(dst) + mac(src) + struct.pack("!H", ethertype) + payload


def ipv4(src, dst, proto, payload, ttl=64, ident=0x1234, df=True, tos=0):
    flags_frag = 0x4000 if df else 0
    hdr = struct.pack("!BBHHHBBH4s4s", 0x45, tos, 20 + len(payload), ident, flags_frag, ttl, proto, 0,
                      ip4(src), ip4(dst))
    hdr = hdr[:10] + struct.pack("!H", csum(hdr)) + hdr[12:]
    return hdr + payload


def tcp(sport, dport, seq, ack, flags, window, payload=b"", options=b""):
    assert len(options) % 4 == 0
    off = (20 + len(options)) // 4
    return struct.pack("!HHIIBBHHH", sport, dport, seq, ack, off << 4, flags, window, 0, 0) + options + payload


def udp(sport, dport, payload):
    return struct.pack("!HHHH", sport, dport, 8 + len(payload), 0) + payload


def dns_query(ident, name):
    q = b"".join(bytes([len(p)]) + p.encode() for p in name.split(".")) + b"\0"
    return struct.pack("!HHHHHH", ident, 0x0100, 1, 0, 0, 0) + q + struct.pack("!HH", 1, 1)


def record(ts_sec, ts_usec, frame, big=False):
    e = ">" if big else "<"
    return struct.pack(e + "IIII", ts_sec, ts_usec, len(frame), len(frame)) + frame


def pcap(records, big=False, nanos=False):
    e = ">" if big else "<"
    magic = 0xA1B23C4D if nanos else 0xA1B2C3D4
    return struct.pack(e + "IHHiIII", magic, 2, 4, 0, 0, 65535, 1) + b"".join(records)


def main(out):
    os.makedirs(out, exist_ok=True)
    expected = {}

    # --- three packets: TCP from A, DNS from B, ICMP echo from an unknown host
    tcp_frame = eth(GATEWAY, DEV_A, 0x0800,
                    ipv4("192.168.1.10", "93.184.216.34", 6,
                         tcp(49200, 443, 1000, 0, 0x02, 65535, options=struct.pack("!BBH", 2, 4, 1460)),
                         ttl=64, ident=0x1234, df=True))
    dns_frame = eth(GATEWAY, DEV_B, 0x0800,
                    ipv4("192.168.1.11", "192.168.1.1", 17, udp(53000, 53, dns_query(0xBEEF, "time.example.org")),
                         ttl=128, ident=7, df=False))
    icmp_body = struct.pack("!BBHHH", 8, 0, 0, 1, 1) + b"ping"
    icmp_body = icmp_body[:2] + struct.pack("!H", csum(icmp_body)) + icmp_body[4:]
    icmp_frame = eth("ff:ff:ff:ff:ff:ff", STRANGER, 0x0800,
                     ipv4("192.168.1.99", "192.168.1.255", 1, icmp_body, ttl=255, ident=0, df=False))
    frames = [tcp_frame, dns_frame, icmp_frame]
    stamps = [(1_600_000_000, 0), (1_600_000_001, 500_000), (1_600_000_003, 250_000)]
    for name, big in (("three_packets.pcap", False), ("three_packets_swapped.pcap", True)):
        with open(os.path.join(out, name), "wb") as f:
            f.write(pcap([record(s, u, fr, big) for (s, u), fr in zip(stamps, frames)], big=big))
    with open(os.path.join(out, "three_packets_nanos.pcap"), "wb") as f:
        f.write(pcap([record(s, u * 1000, fr) for (s, u), fr in zip(stamps, frames)], nanos=True))
    full = pcap([record(s, u, fr) for (s, u), fr in zip(stamps, frames)])
    with open(os.path.join(out, "truncated.pcap"), "wb") as f:
        f.write(full[:-10])
    with open(os.path.join(out, "empty.pcap"), "wb") as f:
        pass

    expected["three_packets"] = {
        "timestamps_us": [s * 1_000_000 + u for s, u in stamps],
        "lengths": [len(fr) for fr in frames],
        "tcp": {"ip.ttl": 64, "ip.len": len(tcp_frame) - 14, "ip.flags.df": 1, "ip.id": 0x1234,
                "tcp.seq": 1000, "tcp.ack": 0, "tcp.window_size": 65535, "tcp.dstport": 443,
                "tcp.srcport": 49200, "tcp.hdr_len": 24, "tcp.options.mss_val": 1460, "tcp.flags.syn": 1,
                "eth.frame_len": len(tcp_frame)},
        "dns": {"ip.ttl": 128, "ip.flags.df": 0, "udp.dstport": 53, "dns.flags.response": 0,
                "dns.count.queries": 1, "dns.id": 0xBEEF, "dns.qry.name.len": len("time.example.org"),
                "dns.count.labels": 3, "dns.qry.type": 1},
        "truncated_complete_packets": 2,
    }

    # --- EAPOL key frame from A (no IP layer)
    eapol = struct.pack("!BBH", 2, 3, 95) + struct.pack("!BH", 2, 0x008A) + bytes(92)
    eapol_frame = eth(GATEWAY, DEV_A, 0x888E, eapol)
    with open(os.path.join(out, "eapol.pcap"), "wb") as f:
        f.write(pcap([record(1_600_000_010, 0, eapol_frame)]))
    expected["eapol"] = {"eapol.version": 2, "eapol.type": 3, "eapol.len": 95}

    # --- one-direction TCP flow: t = 0, 1, 3 s; payloads 100, 200, 300 bytes
    flow = []
    seq = 5000
    for t, size in ((0, 100), (1, 200), (3, 300)):
        fr = eth(GATEWAY, DEV_A, 0x0800,
                 ipv4("192.168.1.10", "10.1.1.1", 6, tcp(40000, 8883, seq, 1, 0x18, 2048, bytes(size))))
        seq += size
        flow.append(record(1_600_000_100 + t, 0, fr))
    with open(os.path.join(out, "flow3.pcap"), "wb") as f:
        f.write(pcap(flow))
    expected["flow3"] = {"duration": 3.0, "tot_fwd_pkts": 3, "fwd_iat_mean": 1.5, "pkt_len_mean": 200.0,
                         "tot_bwd_pkts": 0, "totlen_fwd": 600}

    with open(os.path.join(out, "labels.csv"), "w") as f:
        f.write("mac,device\n%s,device-a\n%s,device-b\n" % (DEV_A, DEV_B))

    expected["scapy_verified"] = verify_with_scapy(out, expected)
    with open(os.path.join(out, "expected.json"), "w") as f:
        json.dump(expected, f, indent=2, sort_keys=True)
        f.write("\n")


def verify_with_scapy(out, expected):
    try:
        from scapy.all import DNS, EAPOL, ICMP, IP, TCP, UDP, rdpcap
    except ImportError:
        return False
    for name in ("three_packets.pcap", "three_packets_swapped.pcap"):
        pk = rdpcap(os.path.join(out, name))
        assert len(pk) == 3
        assert [int(p.time * 1_000_000 + 0.5) for p in pk] == expected["three_packets"]["timestamps_us"]
        t = expected["three_packets"]["tcp"]
        ip, tc = pk[0][IP], pk[0][TCP]
        assert ip.ttl == t["ip.ttl"] and ip.len == t["ip.len"] and ip.id == t["ip.id"]
        assert bool(ip.flags.DF) == bool(t["ip.flags.df"])
        assert tc.seq == t["tcp.seq"] and tc.window == t["tcp.window_size"] and tc.dport == t["tcp.dstport"]
        assert tc.dataofs * 4 == t["tcp.hdr_len"] and dict(tc.options)["MSS"] == t["tcp.options.mss_val"]
        d = expected["three_packets"]["dns"]
        assert pk[1][IP].ttl == d["ip.ttl"] and pk[1][UDP].dport == d["udp.dstport"]
        assert pk[1][DNS].qr == d["dns.flags.response"] and pk[1][DNS].qdcount == d["dns.count.queries"]
        assert pk[1][DNS].id == d["dns.id"]
        assert pk[2].haslayer(ICMP)
    e = rdpcap(os.path.join(out, "eapol.pcap"))[0][EAPOL]
    assert e.version == expected["eapol"]["eapol.version"] and e.type == expected["eapol"]["eapol.type"]
    assert e.len == expected["eapol"]["eapol.len"]
    fl = rdpcap(os.path.join(out, "flow3.pcap"))
    assert [len(p[TCP].payload) for p in fl] == [100, 200, 300]
    assert float(fl[-1].time - fl[0].time) == expected["flow3"]["duration"]
    return True


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else os.path.dirname(os.path.abspath(__file__)))
