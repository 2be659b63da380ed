db.Patients.insertOne({_id: "p1", age: 42})
db.Patients.updateOne({_id: "p1"}, {$set: {weight: 70.5, "address.city": "Toulouse"}})
