import pytest

from padmm.topology import Graph, complete, random_connected, ring


class TestConstructions:
    def test_ring_neighbors(self):
        g = ring(4)
        assert g.neighbors(0) == {1, 3}

    def test_ring3_equals_complete3(self):
        assert ring(3).edges == complete(3).edges

    def test_edge_counts(self):
        assert len(ring(5).edges) == 5
        assert len(complete(5).edges) == 10

    def test_complete_neighbors(self):
        g = complete(5)
        for i in range(5):
            assert g.neighbors(i) == set(range(5)) - {i}

    def test_minimums(self):
        with pytest.raises(ValueError):
            ring(2)
        with pytest.raises(ValueError):
            Graph(1, [])


class TestValidation:
    def test_rejects_self_loop(self):
        with pytest.raises(ValueError, match="self-loop"):
            Graph(3, [(0, 0), (0, 1), (1, 2)])

    def test_rejects_disconnected(self):
        with pytest.raises(ValueError, match="connected"):
            Graph(4, [(0, 1), (2, 3)])

    def test_out_of_range_neighbor_query(self):
        with pytest.raises(ValueError):
            ring(4).neighbors(4)


class TestRandomConnected:
    def test_full_probability_is_complete(self):
        g = random_connected(6, 1.0, 0)
        assert g.edges == complete(6).edges

    def test_two_nodes_forced_edge(self):
        g = random_connected(2, 0.01, 0)
        assert g.edges == frozenset({(0, 1)})

    def test_deterministic(self):
        a = random_connected(8, 0.4, 11)
        b = random_connected(8, 0.4, 11)
        assert a.edges == b.edges

    def test_always_connected_and_symmetric(self):
        for seed in range(20):
            g = random_connected(7, 0.2, seed)
            for i in range(7):
                for j in g.neighbors(i):
                    assert i in g.neighbors(j)
                    assert i != j
